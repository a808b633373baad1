#![allow(dead_code)]

use beamsec::numcore::{Activation, DenseLayer, Matrix, MlpModel};
use rand::Rng;

/// Random model with hidden widths drawn from `1..=max_dim`, ReLU hidden
/// layers and a tanh head. Weights are uniform in `[-1, 1]`, biases in
/// `[-0.5, 0.5]`.
pub fn random_model<R: Rng>(rng: &mut R, max_dim: usize) -> MlpModel {
    let input_dim = rng.random_range(1..=max_dim);
    let depth = rng.random_range(1..=3);
    let mut widths = vec![input_dim];
    widths.extend((0..depth).map(|_| rng.random_range(1..=max_dim)));
    widths.push(1);
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| DenseLayer {
            weights: Matrix::from_fn(w[1], w[0], |_, _| rng.random_range(-1.0..1.0)),
            bias: (0..w[1]).map(|_| rng.random_range(-0.5..0.5)).collect(),
            activation: if i == depth { Activation::Tanh } else { Activation::Relu },
            dropout_ratio: 0.0,
        })
        .collect();
    MlpModel::from_layers(layers, 0).unwrap()
}

/// Forward pass written out with plain loops, independent of the library.
/// Returns the output and every pre-activation.
pub fn oracle_forward(model: &MlpModel, x: &[f64]) -> (f64, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pre_all = Vec::new();
    for layer in model.layers() {
        let (rows, cols) = layer.weights.shape();
        let mut next = vec![0.0; rows];
        for r in 0..rows {
            let mut z = layer.bias[r];
            for c in 0..cols {
                z += layer.weights.get(r, c) * a[c];
            }
            pre_all.push(z);
            next[r] = match layer.activation {
                Activation::Relu => z.max(0.0),
                Activation::Tanh => z.tanh(),
            };
        }
        a = next;
    }
    (a[0], pre_all)
}

pub fn oracle_loss(model: &MlpModel, x: &[f64], y: f64) -> f64 {
    let (p, _) = oracle_forward(model, x);
    (p - y) * (p - y)
}

/// Draws an input whose hidden pre-activations all stay at least `margin`
/// away from the ReLU kink.
pub fn input_away_from_kinks<R: Rng>(rng: &mut R, model: &MlpModel, margin: f64) -> Option<Vec<f64>> {
    for _ in 0..200 {
        let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, pre) = oracle_forward(model, &x);
        let hidden = pre.len() - 1;
        if pre[..hidden].iter().all(|z| z.abs() > margin) {
            return Some(x);
        }
    }
    None
}

/// Central difference of `f` at `v` along one coordinate.
pub fn central_diff(f: impl Fn(f64) -> f64, v: f64, h: f64) -> f64 {
    (f(v + h) - f(v - h)) / (2.0 * h)
}

pub fn close(analytic: f64, numeric: f64, rel: f64, abs: f64) -> bool {
    (analytic - numeric).abs() <= abs + rel * analytic.abs().max(numeric.abs())
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Spearman rank correlation without tie handling.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    pearson(&ranks(a), &ranks(b))
}
