//! Iterative adversarial training.
//!
//! Round 0 fits the model on clean rows. Every later round crafts fresh FGSM
//! examples against the current model, appends them (with their clean labels)
//! to the training pool and fine-tunes. A held-out slice of the clean rows is
//! attacked after every round; training stops once that adversarial error no
//! longer improves by the configured relative tolerance.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{attack_rows, Attack, AttackConfig, Fgsm};
use crate::channel::Dataset;
use crate::error::{Error, Result};
use crate::numcore::{mse_loss, predict_rows, MlpModel, Matrix, TrainConfig, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefenseConfig {
    pub epsilon: f64,
    pub max_rounds: usize,
    pub steady_state_rel_tol: f64,
    pub augment_fraction: f64,
    /// Share of the base rows held out for the plateau test.
    pub holdout_fraction: f64,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            max_rounds: 10,
            steady_state_rel_tol: 0.01,
            augment_fraction: 1.0,
            holdout_fraction: 0.1,
        }
    }
}

impl DefenseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("defense_cfg.epsilon", "must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(Error::config("defense_cfg.max_rounds", "must be positive"));
        }
        if !(self.steady_state_rel_tol > 0.0) {
            return Err(Error::config("defense_cfg.steady_state_rel_tol", "must be positive"));
        }
        if !(self.augment_fraction > 0.0 && self.augment_fraction <= 1.0) {
            return Err(Error::config("defense_cfg.augment_fraction", "must lie in (0, 1]"));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::config("defense_cfg.holdout_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Held-out clean MSE after this round.
    pub clean_mse: f64,
    /// Held-out MSE under FGSM at the training budget.
    pub adv_mse: f64,
    pub dataset_rows: usize,
}

#[derive(Debug, Clone)]
pub struct DefenseOutcome {
    /// Snapshot from the round with the lowest held-out adversarial MSE.
    pub model: MlpModel,
    pub best_round: usize,
    pub rounds: Vec<RoundRecord>,
}

/// Splits `base` into (fit rows, plateau hold-out) using a shuffle from `rng`.
pub fn split_holdout<R: Rng + ?Sized>(
    base: &Dataset,
    holdout_fraction: f64,
    rng: &mut R,
) -> (Dataset, Dataset) {
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.shuffle(rng);
    let n_hold = ((base.len() as f64 * holdout_fraction).round() as usize).clamp(1, base.len() - 1);
    let (hold, fit) = order.split_at(n_hold);
    (base.subset(fit), base.subset(hold))
}

fn dataset_mse(model: &MlpModel, features: &Matrix, labels: &[f64]) -> Result<f64> {
    let pred = predict_rows(model, features)?;
    let mse = mse_loss(&pred, labels)?;
    if !mse.is_finite() {
        return Err(Error::NonFinite("evaluation MSE".into()));
    }
    Ok(mse)
}

/// Runs the adversarial training loop starting from `model`.
pub fn adversarial_train<R: Rng + ?Sized>(
    mut model: MlpModel,
    base: &Dataset,
    train_cfg: &TrainConfig,
    def_cfg: &DefenseConfig,
    rng: &mut R,
) -> Result<DefenseOutcome> {
    def_cfg.validate()?;
    if base.len() < 2 {
        return Err(Error::Empty("adversarial training needs at least two rows"));
    }
    let (fit, holdout) = split_holdout(base, def_cfg.holdout_fraction, rng);
    let attack = Fgsm::new(AttackConfig::linf(def_cfg.epsilon))?;
    let per_round = (def_cfg.augment_fraction * fit.len() as f64).ceil() as usize;

    let mut pool_x = fit.features.clone();
    let mut pool_y = fit.labels.clone();
    let mut trainer = Trainer::new(&model, train_cfg.clone())?;
    let mut rounds: Vec<RoundRecord> = Vec::with_capacity(def_cfg.max_rounds);
    let mut best: Option<(usize, f64, MlpModel)> = None;

    for round in 0..def_cfg.max_rounds {
        if round > 0 {
            let sources: Vec<usize> = if per_round >= fit.len() {
                (0..fit.len()).collect()
            } else {
                let mut s = index::sample(rng, fit.len(), per_round).into_vec();
                s.sort_unstable();
                s
            };
            let src_x = fit.features.select_rows(&sources);
            let src_y: Vec<f64> = sources.iter().map(|&i| fit.labels[i]).collect();
            let adv = attack_rows(&attack as &dyn Attack, &model, &src_x, &src_y)?;
            pool_x.vstack(&adv)?;
            pool_y.extend_from_slice(&src_y);
        }
        trainer.fit(&mut model, &pool_x, &pool_y, rng)?;

        let clean_mse = dataset_mse(&model, &holdout.features, &holdout.labels)?;
        let adv_x = attack_rows(&attack, &model, &holdout.features, &holdout.labels)?;
        let adv_mse = dataset_mse(&model, &adv_x, &holdout.labels)?;
        let previous = rounds.last().map(|r| r.adv_mse);
        rounds.push(RoundRecord {
            round,
            clean_mse,
            adv_mse,
            dataset_rows: pool_y.len(),
        });
        if best.as_ref().is_none_or(|(_, b, _)| adv_mse < *b) {
            best = Some((round, adv_mse, model.clone()));
        }
        if let Some(prev) = previous {
            if (prev - adv_mse) / prev < def_cfg.steady_state_rel_tol {
                break;
            }
        }
    }
    let (best_round, _, model) = best.expect("at least one round");
    Ok(DefenseOutcome {
        model,
        best_round,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub epsilon: f64,
    pub mse: f64,
}

/// Test MSE under FGSM for every budget in `eps_grid` (ε = 0 is the clean MSE).
pub fn evaluate_robustness(model: &MlpModel, test: &Dataset, eps_grid: &[f64]) -> Result<Vec<RobustnessPoint>> {
    if eps_grid.is_empty() {
        return Err(Error::Empty("epsilon grid"));
    }
    eps_grid
        .iter()
        .map(|&epsilon| {
            let attack = Fgsm::new(AttackConfig::linf(epsilon))?;
            let x = attack_rows(&attack, model, &test.features, &test.labels)?;
            Ok(RobustnessPoint {
                epsilon,
                mse: dataset_mse(model, &x, &test.labels)?,
            })
        })
        .collect()
}

/// `round,clean_mse,adv_mse,dataset_rows` lines.
pub fn rounds_csv(rounds: &[RoundRecord]) -> String {
    let mut out = String::from("round,clean_mse,adv_mse,dataset_rows\n");
    for r in rounds {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.round,
            crate::harness::fmt_sig(r.clean_mse),
            crate::harness::fmt_sig(r.adv_mse),
            r.dataset_rows
        ));
    }
    out
}
