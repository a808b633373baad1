use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioId;
use crate::channel::ScenarioParams;
use crate::defense::DefenseConfig;
use crate::error::{Error, Result};
use crate::numcore::{Architecture, TrainConfig};

/// Ten evenly spaced budgets from 0.01 to 0.10.
pub fn default_attack_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 100.0).collect()
}

/// Everything one `run` needs. Every field has a default, so `{}` is a
/// valid config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario_params: ScenarioParams,
    pub architecture: Architecture,
    pub train_cfg: TrainConfig,
    pub attack_grid: Vec<f64>,
    pub defense_cfg: DefenseConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Instances generated per repetition, before the train/test split.
    pub num_instances: usize,
    pub train_fraction: f64,
    pub scenarios: Vec<ScenarioId>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario_params: ScenarioParams::default(),
            architecture: Architecture::default(),
            train_cfg: TrainConfig::default(),
            attack_grid: default_attack_grid(),
            defense_cfg: DefenseConfig::default(),
            repetitions: 20,
            base_seed: 0,
            output_dir: PathBuf::from("out"),
            num_instances: 12_500,
            train_fraction: 0.8,
            scenarios: ScenarioId::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario_params.validate()?;
        self.architecture.validate()?;
        self.train_cfg.validate()?;
        if self.scenarios.contains(&ScenarioId::Sc3) {
            self.defense_cfg.validate()?;
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be positive"));
        }
        if self.attack_grid.is_empty() {
            return Err(Error::config("attack_grid", "must not be empty"));
        }
        if let Some(i) = self
            .attack_grid
            .iter()
            .position(|e| !(e.is_finite() && *e >= 0.0))
        {
            return Err(Error::config(
                format!("attack_grid[{i}]"),
                "budgets must be finite and nonnegative",
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1)"));
        }
        let n_train = (self.num_instances as f64 * self.train_fraction).round() as usize;
        if n_train < 2 || n_train >= self.num_instances {
            return Err(Error::config(
                "num_instances",
                "too small for a train/test split",
            ));
        }
        if self.scenarios.is_empty() {
            return Err(Error::config("scenarios", "must not be empty"));
        }
        Ok(())
    }
}
