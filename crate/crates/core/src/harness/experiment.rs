use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::scenario::{RepContext, ScenarioId, ScenarioRegistry};
use crate::defense::{rounds_csv, RoundRecord};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "scenario,epsilon,repetition,mse";
pub const TIMINGS_HEADER: &str = "scenario,epsilon,repetition,wall_time_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: ScenarioId,
    pub epsilon: f64,
    pub repetition: usize,
    pub mse: f64,
    /// Time spent in this row's scenario evaluation, shared by all its ε rows.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    /// Sorted by (scenario, ε, repetition).
    pub rows: Vec<ResultRow>,
    /// Per-repetition defense trajectories, present when SC3 ran.
    pub defense_rounds: Vec<(usize, Vec<RoundRecord>)>,
}

struct RepOutput {
    rows: Vec<ResultRow>,
    rounds: Option<(usize, Vec<RoundRecord>)>,
}

fn run_repetition(cfg: &ExperimentConfig, registry: &ScenarioRegistry, repetition: usize) -> Result<RepOutput> {
    let mut ctx = RepContext::prepare(cfg, repetition)?;
    let mut rows = Vec::new();
    for &id in &cfg.scenarios {
        let scenario = registry.get(id)?;
        let start = Instant::now();
        let points = scenario.evaluate(&mut ctx)?;
        let wall_time_s = start.elapsed().as_secs_f64();
        for p in points {
            if !(p.mse.is_finite() && p.mse >= 0.0) {
                return Err(Error::NonFinite(format!("{id} MSE at ε={} in repetition {repetition}", p.epsilon)));
            }
            rows.push(ResultRow {
                scenario: id,
                epsilon: p.epsilon,
                repetition,
                mse: p.mse,
                wall_time_s,
            });
        }
    }
    let rounds = ctx.defense_outcome().map(|o| (repetition, o.rounds.clone()));
    Ok(RepOutput { rows, rounds })
}

/// Runs every configured scenario for every repetition. Repetitions run in
/// parallel on the current rayon pool; the output order does not depend on
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &ScenarioRegistry::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, registry: &ScenarioRegistry) -> Result<ExperimentResult> {
    cfg.validate()?;
    let outputs: Vec<RepOutput> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(cfg, registry, r))
        .collect::<Result<_>>()?;
    let mut result = ExperimentResult::default();
    for out in outputs {
        result.rows.extend(out.rows);
        result.defense_rounds.extend(out.rounds);
    }
    result.rows.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.repetition.cmp(&b.repetition))
    });
    Ok(result)
}

impl ExperimentResult {
    /// Result rows without timings. Floats use the shortest round-trip form, so
    /// the text is a pure function of the computed values.
    pub fn results_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.scenario, r.epsilon, r.repetition, r.mse));
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = format!("{TIMINGS_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.3}\n", r.scenario, r.epsilon, r.repetition, r.wall_time_s));
        }
        out
    }

    /// Parses text produced by [`ExperimentResult::results_csv`]. Wall times
    /// are not part of that format and come back as zero.
    pub fn parse_results_csv(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == RESULTS_HEADER => {}
            other => return Err(format!("expected header `{RESULTS_HEADER}`, found {other:?}")),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.trim().split(',').collect();
            let bad = |what: &str| format!("line {}: {what}", i + 2);
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            rows.push(ResultRow {
                scenario: fields[0].parse().map_err(|_| bad("unknown scenario"))?,
                epsilon: fields[1].parse().map_err(|_| bad("bad epsilon"))?,
                repetition: fields[2].parse().map_err(|_| bad("bad repetition"))?,
                mse: fields[3].parse().map_err(|_| bad("bad mse"))?,
                wall_time_s: 0.0,
            });
        }
        Ok(Self {
            rows,
            defense_rounds: Vec::new(),
        })
    }

    pub fn read_results(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_results_csv(&text).map_err(|message| Error::Format {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Writes `results.csv`, `timings.csv` and one `rounds_rep<r>.csv` per
    /// defended repetition under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("results.csv"), &self.results_csv())?;
        write_file(&dir.join("timings.csv"), &self.timings_csv())?;
        for (rep, rounds) in &self.defense_rounds {
            write_file(&dir.join(format!("rounds_rep{rep}.csv")), &rounds_csv(rounds))?;
        }
        Ok(())
    }

    pub fn mse(&self, scenario: ScenarioId, epsilon: f64, repetition: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.epsilon == epsilon && r.repetition == repetition)
            .map(|r| r.mse)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}
