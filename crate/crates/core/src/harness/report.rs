use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{write_file, ExperimentResult};
use super::format::{fmt_sig, round_sig};
use super::scenario::ScenarioId;
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "scenario,epsilon,mean_mse,std_mse,min_mse,max_mse,n";
pub const RATIOS_HEADER: &str = "scenario,epsilon,mean_ratio,n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: ScenarioId,
    pub epsilon: f64,
    pub mean_mse: f64,
    /// Population standard deviation.
    pub std_mse: f64,
    pub min_mse: f64,
    pub max_mse: f64,
    pub n: usize,
}

/// Mean over repetitions of `MSE(scenario, ε) / MSE(SC1)` within the same
/// repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub scenario: ScenarioId,
    pub epsilon: f64,
    pub mean_ratio: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub ratios: Vec<RatioRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::config("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

fn stats(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), min, max)
}

/// Groups rows by (scenario, ε) in ascending order.
pub fn summarize(result: &ExperimentResult) -> Result<Summary> {
    if result.rows.is_empty() {
        return Err(Error::Empty("experiment result has no rows"));
    }
    // ε keys use the bit pattern; the rows carry the exact grid values.
    let mut groups: BTreeMap<(ScenarioId, u64), Vec<&_>> = BTreeMap::new();
    for r in &result.rows {
        groups.entry((r.scenario, r.epsilon.to_bits())).or_default().push(r);
    }
    let mut ordered: Vec<_> = groups.into_iter().collect();
    ordered.sort_by(|a, b| {
        a.0 .0
            .cmp(&b.0 .0)
            .then(f64::from_bits(a.0 .1).total_cmp(&f64::from_bits(b.0 .1)))
    });

    let baseline: BTreeMap<usize, f64> = result
        .rows
        .iter()
        .filter(|r| r.scenario == ScenarioId::Sc1)
        .map(|r| (r.repetition, r.mse))
        .collect();

    let mut rows = Vec::with_capacity(ordered.len());
    let mut ratios = Vec::new();
    for ((scenario, eps_bits), members) in ordered {
        let epsilon = f64::from_bits(eps_bits);
        let values: Vec<f64> = members.iter().map(|r| r.mse).collect();
        let (mean_mse, std_mse, min_mse, max_mse) = stats(&values);
        rows.push(SummaryRow {
            scenario,
            epsilon,
            mean_mse,
            std_mse,
            min_mse,
            max_mse,
            n: values.len(),
        });
        if scenario == ScenarioId::Sc1 {
            continue;
        }
        let per_rep: Vec<f64> = members
            .iter()
            .filter_map(|r| baseline.get(&r.repetition).map(|b| r.mse / b))
            .collect();
        if !per_rep.is_empty() {
            ratios.push(RatioRow {
                scenario,
                epsilon,
                mean_ratio: per_rep.iter().sum::<f64>() / per_rep.len() as f64,
                n: per_rep.len(),
            });
        }
    }
    Ok(Summary { rows, ratios })
}

impl Summary {
    pub fn row(&self, scenario: ScenarioId, epsilon: f64) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.epsilon == epsilon)
    }

    pub fn ratio(&self, scenario: ScenarioId, epsilon: f64) -> Option<f64> {
        self.ratios
            .iter()
            .find(|r| r.scenario == scenario && r.epsilon == epsilon)
            .map(|r| r.mean_ratio)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.scenario,
                fmt_sig(r.epsilon),
                fmt_sig(r.mean_mse),
                fmt_sig(r.std_mse),
                fmt_sig(r.min_mse),
                fmt_sig(r.max_mse),
                r.n
            ));
        }
        out
    }

    pub fn ratios_csv(&self) -> String {
        let mut out = format!("{RATIOS_HEADER}\n");
        for r in &self.ratios {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.scenario,
                fmt_sig(r.epsilon),
                fmt_sig(r.mean_ratio),
                r.n
            ));
        }
        out
    }

    /// Copy with every float rounded to six significant digits.
    pub fn rounded(&self) -> Summary {
        Summary {
            rows: self
                .rows
                .iter()
                .map(|r| SummaryRow {
                    epsilon: round_sig(r.epsilon),
                    mean_mse: round_sig(r.mean_mse),
                    std_mse: round_sig(r.std_mse),
                    min_mse: round_sig(r.min_mse),
                    max_mse: round_sig(r.max_mse),
                    ..r.clone()
                })
                .collect(),
            ratios: self
                .ratios
                .iter()
                .map(|r| RatioRow {
                    epsilon: round_sig(r.epsilon),
                    mean_ratio: round_sig(r.mean_ratio),
                    ..r.clone()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rounded()).expect("summary serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Summary> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Writes the summary under `dir` and returns the created paths.
/// CSV produces `summary.csv` and `ratios.csv`; JSON produces `summary.json`.
pub fn emit_report(summary: &Summary, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    if summary.rows.is_empty() {
        return Err(Error::Empty("summary has no rows"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = match format {
        ReportFormat::Csv => vec![
            (dir.join("summary.csv"), summary.summary_csv()),
            (dir.join("ratios.csv"), summary.ratios_csv()),
        ],
        ReportFormat::Json => vec![(dir.join("summary.json"), summary.to_json())],
    };
    for (path, text) in &files {
        write_file(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
