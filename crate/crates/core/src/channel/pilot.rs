use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::ScenarioParams;
use super::propagation::ChannelRealization;

/// Omni-pattern uplink pilot observations: the first array element of every
/// BS and subcarrier plus complex Gaussian noise of variance `σ²`, laid out as
/// `[Re, Im]` pairs, BS-major then subcarrier.
pub fn pilot_features<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    params: &ScenarioParams,
    rng: &mut R,
) -> Vec<f64> {
    let noise = (params.noise_variance > 0.0).then(|| {
        Normal::new(0.0, (params.noise_variance / 2.0).sqrt()).expect("finite std")
    });
    let mut out = Vec::with_capacity(2 * params.num_subcarriers * params.num_bs);
    for bs in &channel.h {
        for hk in bs {
            let mut y = hk[0];
            if let Some(n) = &noise {
                y.re += n.sample(rng);
                y.im += n.sample(rng);
            }
            out.push(y.re);
            out.push(y.im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::propagation::generate_channels;
    use crate::rng;

    #[test]
    fn noiseless_features_are_first_element() {
        let p = ScenarioParams::default();
        let ch = generate_channels(&p, [42.0, -1.5]).unwrap();
        let f = pilot_features(&ch, &p, &mut rng::stream(0));
        assert_eq!(f.len(), 2 * p.num_subcarriers * p.num_bs);
        for k in 0..p.num_subcarriers {
            assert_eq!(f[2 * k], ch.h[0][k][0].re);
            assert_eq!(f[2 * k + 1], ch.h[0][k][0].im);
        }
    }

    #[test]
    fn length_is_two_k_n() {
        let p = ScenarioParams {
            num_subcarriers: 2,
            ..ScenarioParams::default()
        };
        let ch = generate_channels(&p, [40.0, 0.0]).unwrap();
        assert_eq!(pilot_features(&ch, &p, &mut rng::stream(1)).len(), 4);
    }

    #[test]
    fn noise_variance_splits_across_components() {
        // Monte-Carlo oracle: each component should carry σ²/2.
        let p = ScenarioParams {
            noise_variance: 2e-10,
            ..ScenarioParams::default()
        };
        let ch = generate_channels(&p, [40.0, 0.0]).unwrap();
        let clean = pilot_features(&ch, &ScenarioParams { noise_variance: 0.0, ..p.clone() }, &mut rng::stream(0));
        let mut r = rng::stream(5);
        let draws = 10_000;
        let mut acc = vec![0.0; clean.len()];
        for _ in 0..draws {
            let f = pilot_features(&ch, &p, &mut r);
            for ((a, x), c) in acc.iter_mut().zip(&f).zip(&clean) {
                *a += (x - c) * (x - c);
            }
        }
        for a in acc {
            let var = a / draws as f64;
            assert!((var / 1e-10 - 1.0).abs() < 0.05, "variance {var}");
        }
    }
}
