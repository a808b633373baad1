use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::channel::{build_raw, Dataset, NormMeta};
use crate::defense::{adversarial_train, evaluate_robustness, DefenseOutcome, RobustnessPoint};
use crate::error::{Error, Result};
use crate::numcore::{mse_loss, predict_rows, train, MlpModel};
use crate::rng;

/// Stream offsets used under each repetition seed.
const TRAIN_STREAM: u64 = 1 << 40;
const DEFENSE_STREAM: u64 = TRAIN_STREAM + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    /// Undefended model, clean test rows.
    #[serde(rename = "SC1")]
    Sc1,
    /// Undefended model, FGSM test rows.
    #[serde(rename = "SC2")]
    Sc2,
    /// Adversarially trained model, FGSM test rows.
    #[serde(rename = "SC3")]
    Sc3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::Sc1, ScenarioId::Sc2, ScenarioId::Sc3];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Sc1 => "SC1",
            ScenarioId::Sc2 => "SC2",
            ScenarioId::Sc3 => "SC3",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("scenarios", format!("unknown scenario `{s}`")))
    }
}

/// Data and lazily trained models shared by the scenarios of one repetition.
#[derive(Debug)]
pub struct RepContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub repetition: usize,
    pub seed: u64,
    pub train: Dataset,
    pub test: Dataset,
    undefended: Option<MlpModel>,
    defended: Option<DefenseOutcome>,
}

impl<'a> RepContext<'a> {
    /// Generates the repetition's dataset, splits it and standardises both
    /// halves with constants fitted on the training half.
    pub fn prepare(cfg: &'a ExperimentConfig, repetition: usize) -> Result<Self> {
        let seed = cfg.base_seed.wrapping_add(repetition as u64);
        let mut params = cfg.scenario_params.clone();
        params.seed = seed;
        let raw = build_raw(&params, cfg.num_instances)?;
        let (train_raw, test_raw) = raw.split(cfg.train_fraction);
        let meta = NormMeta::fit(&train_raw)?;
        Ok(Self {
            cfg,
            repetition,
            seed,
            train: meta.apply(&train_raw)?,
            test: meta.apply(&test_raw)?,
            undefended: None,
            defended: None,
        })
    }

    fn fresh_model(&self) -> Result<MlpModel> {
        self.cfg.architecture.build(self.train.num_features(), self.seed)
    }

    pub fn undefended(&mut self) -> Result<&MlpModel> {
        if self.undefended.is_none() {
            let mut model = self.fresh_model()?;
            let mut stream = rng::child(self.seed, TRAIN_STREAM);
            train(
                &mut model,
                &self.train.features,
                &self.train.labels,
                &self.cfg.train_cfg,
                &mut stream,
            )?;
            self.undefended = Some(model);
        }
        Ok(self.undefended.as_ref().expect("trained above"))
    }

    pub fn defended(&mut self) -> Result<&DefenseOutcome> {
        if self.defended.is_none() {
            let model = self.fresh_model()?;
            let mut stream = rng::child(self.seed, DEFENSE_STREAM);
            let outcome = adversarial_train(
                model,
                &self.train,
                &self.cfg.train_cfg,
                &self.cfg.defense_cfg,
                &mut stream,
            )?;
            self.defended = Some(outcome);
        }
        Ok(self.defended.as_ref().expect("trained above"))
    }

    pub fn defense_outcome(&self) -> Option<&DefenseOutcome> {
        self.defended.as_ref()
    }
}

/// One evaluation setting. Returns `(ε, test MSE)` points.
pub trait Scenario: Send + Sync + fmt::Debug {
    fn id(&self) -> ScenarioId;

    fn evaluate(&self, ctx: &mut RepContext<'_>) -> Result<Vec<RobustnessPoint>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CleanUndefended;

#[derive(Debug, Clone, Copy, Default)]
pub struct AttackedUndefended;

#[derive(Debug, Clone, Copy, Default)]
pub struct AttackedDefended;

impl Scenario for CleanUndefended {
    fn id(&self) -> ScenarioId {
        ScenarioId::Sc1
    }

    fn evaluate(&self, ctx: &mut RepContext<'_>) -> Result<Vec<RobustnessPoint>> {
        let model = ctx.undefended()?.clone();
        let pred = predict_rows(&model, &ctx.test.features)?;
        let mse = mse_loss(&pred, &ctx.test.labels)?;
        if !mse.is_finite() {
            return Err(Error::NonFinite("clean test MSE".into()));
        }
        Ok(vec![RobustnessPoint { epsilon: 0.0, mse }])
    }
}

impl Scenario for AttackedUndefended {
    fn id(&self) -> ScenarioId {
        ScenarioId::Sc2
    }

    fn evaluate(&self, ctx: &mut RepContext<'_>) -> Result<Vec<RobustnessPoint>> {
        let grid = ctx.cfg.attack_grid.clone();
        let model = ctx.undefended()?.clone();
        evaluate_robustness(&model, &ctx.test, &grid)
    }
}

impl Scenario for AttackedDefended {
    fn id(&self) -> ScenarioId {
        ScenarioId::Sc3
    }

    fn evaluate(&self, ctx: &mut RepContext<'_>) -> Result<Vec<RobustnessPoint>> {
        let grid = ctx.cfg.attack_grid.clone();
        let model = ctx.defended()?.model.clone();
        evaluate_robustness(&model, &ctx.test, &grid)
    }
}

/// Scenario id → implementation.
#[derive(Debug)]
pub struct ScenarioRegistry {
    entries: BTreeMap<ScenarioId, Box<dyn Scenario>>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: BTreeMap::new(),
        };
        r.register(Box::new(CleanUndefended));
        r.register(Box::new(AttackedUndefended));
        r.register(Box::new(AttackedDefended));
        r
    }
}

impl ScenarioRegistry {
    pub fn register(&mut self, scenario: Box<dyn Scenario>) {
        self.entries.insert(scenario.id(), scenario);
    }

    pub fn get(&self, id: ScenarioId) -> Result<&dyn Scenario> {
        self.entries
            .get(&id)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::config("scenarios", format!("scenario {id} is not registered")))
    }

    pub fn ids(&self) -> Vec<ScenarioId> {
        self.entries.keys().copied().collect()
    }
}
