mod common;

use std::time::Instant;

use beamsec::numcore::{backward, input_gradient, MlpModel};
use beamsec::rng;
use common::{central_diff, close, input_away_from_kinks, oracle_loss, random_model};
use proptest::prelude::*;
use rand::Rng;

const H: f64 = 1e-5;
const REL: f64 = 1e-4;
const ABS: f64 = 1e-7;

/// Compares every analytic partial with a central difference of the oracle
/// loss. Returns the number of mismatches.
fn fd_mismatches(model: &MlpModel, x: &[f64], y: f64) -> usize {
    let grads = backward(model, x, y).unwrap();
    let mut bad = 0;
    for (li, g) in grads.param_grads.iter().enumerate() {
        let (rows, cols) = g.weights.shape();
        for r in 0..rows {
            for c in 0..cols {
                let fd = central_diff(
                    |v| {
                        let mut m = model.clone();
                        m.layers_mut()[li].weights.set(r, c, v);
                        oracle_loss(&m, x, y)
                    },
                    model.layers()[li].weights.get(r, c),
                    H,
                );
                bad += usize::from(!close(g.weights.get(r, c), fd, REL, ABS));
            }
            let fd = central_diff(
                |v| {
                    let mut m = model.clone();
                    m.layers_mut()[li].bias[r] = v;
                    oracle_loss(&m, x, y)
                },
                model.layers()[li].bias[r],
                H,
            );
            bad += usize::from(!close(g.bias[r], fd, REL, ABS));
        }
    }
    for (i, &g) in grads.input_grad.iter().enumerate() {
        let fd = central_diff(
            |v| {
                let mut xp = x.to_vec();
                xp[i] = v;
                oracle_loss(model, &xp, y)
            },
            x[i],
            H,
        );
        bad += usize::from(!close(g, fd, REL, ABS));
    }
    bad
}

#[test]
fn backward_matches_finite_differences_on_100_models() {
    let start = Instant::now();
    let mut r = rng::stream(7);
    let mut checked = 0;
    while checked < 100 {
        let model = random_model(&mut r, 8);
        let Some(x) = input_away_from_kinks(&mut r, &model, 1e-3) else {
            continue;
        };
        let y = r.random_range(-0.9..0.9);
        assert_eq!(fd_mismatches(&model, &x, y), 0, "model {checked}");
        checked += 1;
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn input_gradient_agrees_with_backward() {
    let mut r = rng::stream(11);
    for _ in 0..50 {
        let model = random_model(&mut r, 8);
        let x: Vec<f64> = (0..model.input_dim()).map(|_| r.random_range(-2.0..2.0)).collect();
        let y = r.random_range(-0.9..0.9);
        let full = backward(&model, &x, y).unwrap().input_grad;
        let only = input_gradient(&model, &x, y).unwrap();
        for (a, b) in full.iter().zip(&only) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn prediction_matches_oracle_forward() {
    let mut r = rng::stream(13);
    for _ in 0..50 {
        let model = random_model(&mut r, 8);
        let x: Vec<f64> = (0..model.input_dim()).map(|_| r.random_range(-2.0..2.0)).collect();
        let (expected, _) = common::oracle_forward(&model, &x);
        assert!((model.predict(&x).unwrap() - expected).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_fd_for_any_seed(seed in any::<u64>(), y in -0.9f64..0.9) {
        let mut r = rng::stream(seed);
        let model = random_model(&mut r, 6);
        if let Some(x) = input_away_from_kinks(&mut r, &model, 1e-3) {
            prop_assert_eq!(fd_mismatches(&model, &x, y), 0);
        }
    }

    #[test]
    fn zero_error_gives_zero_gradient(seed in any::<u64>()) {
        let mut r = rng::stream(seed);
        let model = random_model(&mut r, 6);
        let x: Vec<f64> = (0..model.input_dim()).map(|_| r.random_range(-1.0..1.0)).collect();
        let y = model.predict(&x).unwrap();
        let g = backward(&model, &x, y).unwrap();
        prop_assert!(g.input_grad.iter().all(|v| *v == 0.0));
        prop_assert!(g.param_grads.iter().all(|l| l.bias.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn output_stays_in_open_unit_interval(seed in any::<u64>(), scale in 0.0f64..100.0) {
        let mut r = rng::stream(seed);
        let model = random_model(&mut r, 8);
        let x: Vec<f64> = (0..model.input_dim()).map(|_| scale * r.random_range(-1.0..1.0)).collect();
        let p = model.predict(&x).unwrap();
        prop_assert!((-1.0..=1.0).contains(&p));
    }
}
