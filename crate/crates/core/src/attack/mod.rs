//! White-box input perturbation attacks under an l-infinity budget.
//!
//! Attacks implement [`Attack`] and are looked up by name through an
//! [`AttackRegistry`]; FGSM is the only built-in. Gradients are always taken in
//! inference mode, i.e. against the deployed deterministic model.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Dataset;
use crate::error::{Error, Result};
use crate::numcore::{input_gradient, MlpModel, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Linf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub norm: Norm,
    /// Optional per-feature clamp applied after perturbation.
    #[serde(default)]
    pub clip_range: Option<(f64, f64)>,
}

impl AttackConfig {
    pub fn linf(epsilon: f64) -> Self {
        Self {
            epsilon,
            norm: Norm::Linf,
            clip_range: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        if let Some((lo, hi)) = self.clip_range {
            if !(lo <= hi) {
                return Err(Error::InvalidArgument("clip_range must satisfy lo <= hi".into()));
            }
        }
        Ok(())
    }
}

/// A per-instance adversarial perturbation strategy.
pub trait Attack: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn config(&self) -> &AttackConfig;

    /// Adversarial version of `x` for true label `y`.
    fn perturb(&self, model: &MlpModel, x: &[f64], y: f64) -> Result<Vec<f64>>;
}

/// Fast gradient sign method: `x + ε · sign(∇ₓ loss)`.
#[derive(Debug, Clone)]
pub struct Fgsm {
    cfg: AttackConfig,
}

impl Fgsm {
    pub fn new(cfg: AttackConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }
}

/// `sign` with `sign(0) = 0`.
#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Attack for Fgsm {
    fn name(&self) -> &'static str {
        "fgsm"
    }

    fn config(&self) -> &AttackConfig {
        &self.cfg
    }

    fn perturb(&self, model: &MlpModel, x: &[f64], y: f64) -> Result<Vec<f64>> {
        let eps = self.cfg.epsilon;
        if eps == 0.0 {
            Error::check_dim(model.input_dim(), x.len())?;
            return Ok(x.to_vec());
        }
        let grad = input_gradient(model, x, y)?;
        let mut adv: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v + eps * sign(*g)).collect();
        if let Some((lo, hi)) = self.cfg.clip_range {
            adv.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        Ok(adv)
    }
}

/// FGSM example for a single instance.
pub fn fgsm(model: &MlpModel, x: &[f64], y: f64, cfg: &AttackConfig) -> Result<Vec<f64>> {
    Fgsm::new(cfg.clone())?.perturb(model, x, y)
}

type Factory = fn(AttackConfig) -> Result<Box<dyn Attack>>;

/// Name → constructor table for attacks.
#[derive(Clone)]
pub struct AttackRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl fmt::Debug for AttackRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for AttackRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("fgsm", |cfg| Ok(Box::new(Fgsm::new(cfg)?)));
        r
    }
}

impl AttackRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn create(&self, name: &str, cfg: AttackConfig) -> Result<Box<dyn Attack>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::config(
                "attack",
                format!("unknown attack `{name}`; known: {}", self.names().join(", ")),
            )
        })?;
        factory(cfg)
    }
}

/// Perturbs every row with its own label.
pub fn attack_rows(attack: &dyn Attack, model: &MlpModel, features: &Matrix, labels: &[f64]) -> Result<Matrix> {
    Error::check_dim(model.input_dim(), features.cols())?;
    Error::check_dim(features.rows(), labels.len())?;
    let rows: Vec<Vec<f64>> = (0..features.rows())
        .into_par_iter()
        .map(|r| attack.perturb(model, features.row(r), labels[r]))
        .collect::<Result<_>>()?;
    Matrix::from_vec(features.rows(), features.cols(), rows.concat())
}

/// FGSM applied row-wise to a dataset.
pub fn attack_dataset(model: &MlpModel, data: &Dataset, cfg: &AttackConfig) -> Result<Matrix> {
    let attack = Fgsm::new(cfg.clone())?;
    attack_rows(&attack, model, &data.features, &data.labels)
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_dim(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
