use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{LayerGrad, MlpModel};
use crate::error::{Error, Result};

/// Mini-batch training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 100,
            epochs: 10,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train_cfg.learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train_cfg.batch_size", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("train_cfg.epochs", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return Err(Error::config("train_cfg.adam_beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::config("train_cfg.adam_beta2", "must lie in [0, 1)"));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::config("train_cfg.adam_epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// First/second moment estimates, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<LayerGrad>,
    second: Vec<LayerGrad>,
    /// Number of completed steps.
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros = || {
            model
                .layers()
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect::<Vec<_>>()
        };
        Self {
            first: zeros(),
            second: zeros(),
            t: 0,
        }
    }

    fn check_shapes(&self, model: &MlpModel, grads: &[LayerGrad]) -> Result<()> {
        Error::check_dim(model.layers().len(), grads.len())?;
        Error::check_dim(model.layers().len(), self.first.len())?;
        for ((l, g), m) in model.layers().iter().zip(grads).zip(&self.first) {
            Error::check_dim(l.weights.as_slice().len(), g.weights.as_slice().len())?;
            Error::check_dim(l.weights.as_slice().len(), m.weights.as_slice().len())?;
            Error::check_dim(l.bias.len(), g.bias.len())?;
            Error::check_dim(l.bias.len(), m.bias.len())?;
        }
        Ok(())
    }
}

/// One bias-corrected Adam update at step index `t` (1-based).
pub fn adam_step(
    model: &mut MlpModel,
    grads: &[LayerGrad],
    state: &mut AdamState,
    cfg: &TrainConfig,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("adam step index starts at 1".into()));
    }
    state.check_shapes(model, grads)?;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    let lr = cfg.learning_rate;
    let eps = cfg.adam_epsilon;
    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (((layer, g), m), v) in model
        .layers_mut()
        .iter_mut()
        .zip(grads)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        update(
            layer.weights.as_mut_slice(),
            g.weights.as_slice(),
            m.weights.as_mut_slice(),
            v.weights.as_mut_slice(),
        );
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    state.t = t;
    Ok(())
}
