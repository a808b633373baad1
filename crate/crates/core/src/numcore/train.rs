use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::{adam_step, AdamState, TrainConfig};
use super::matrix::Matrix;
use super::mlp::{GradientBundle, MlpModel, Mode};
use crate::error::{Error, Result};

/// Adam mini-batch trainer. Keeping the trainer alive across calls to
/// [`Trainer::fit`] continues the optimiser state, which is how adversarial
/// fine-tuning rounds proceed.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    state: AdamState,
}

impl Trainer {
    pub fn new(model: &MlpModel, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            state: AdamState::new(model),
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn steps(&self) -> u64 {
        self.state.t
    }

    /// Runs `cfg.epochs` shuffled passes and returns the mean training loss of
    /// each epoch.
    pub fn fit<R: Rng + ?Sized>(
        &mut self,
        model: &mut MlpModel,
        features: &Matrix,
        labels: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        check_training_data(model, features, labels)?;
        let n = labels.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut grads = GradientBundle::zeros_like(model);
        let mut history = Vec::with_capacity(self.cfg.epochs);
        for epoch in 0..self.cfg.epochs {
            order.shuffle(rng);
            let mut total = 0.0;
            for batch in order.chunks(self.cfg.batch_size) {
                grads.clear();
                let scale = 2.0 / batch.len() as f64;
                for &i in batch {
                    let trace = model.trace(features.row(i), Mode::Train, rng)?;
                    let err = trace.output() - labels[i];
                    total += err * err;
                    model.backprop_into(&trace, scale * err, &mut grads);
                }
                let t = self.state.t + 1;
                adam_step(model, &grads.param_grads, &mut self.state, &self.cfg, t)?;
            }
            let loss = total / n as f64;
            if !loss.is_finite() || !model.is_finite() {
                return Err(Error::NonFinite(format!("training diverged in epoch {epoch}")));
            }
            history.push(loss);
        }
        Ok(history)
    }
}

fn check_training_data(model: &MlpModel, features: &Matrix, labels: &[f64]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    Error::check_dim(labels.len(), features.rows())?;
    Error::check_dim(model.input_dim(), features.cols())?;
    if let Some(bad) = labels.iter().find(|y| !(y.abs() < 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside the tanh range (-1, 1)"
        )));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    Ok(())
}

/// Trains `model` in place from a fresh optimiser state.
pub fn train<R: Rng + ?Sized>(
    model: &mut MlpModel,
    features: &Matrix,
    labels: &[f64],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Trainer::new(model, cfg.clone())?.fit(model, features, labels, rng)
}
