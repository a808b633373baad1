use num_complex::Complex64;
use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::codebook::{dft_codebook, Codebook};
use super::params::{Point, ScenarioParams};
use super::pilot::pilot_features;
use super::propagation::generate_channels;
use super::rate::best_beam;
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::rng;

/// Normalised labels occupy `[0, LABEL_CEILING]`.
pub const LABEL_CEILING: f64 = 0.9;

/// Unnormalised pilots and best-beam sum rates (bits/s/Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub features: Matrix,
    pub rates: Vec<f64>,
    pub positions: Vec<Point>,
    pub best_beams: Vec<Vec<usize>>,
    pub scenario: ScenarioParams,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            features: self.features.select_rows(indices),
            rates: indices.iter().map(|&i| self.rates[i]).collect(),
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            best_beams: indices.iter().map(|&i| self.best_beams[i].clone()).collect(),
            scenario: self.scenario.clone(),
        }
    }

    /// First `round(fraction · n)` rows and the rest. Rows are already drawn
    /// i.i.d., so a contiguous split is a random split.
    pub fn split(&self, fraction: f64) -> (RawDataset, RawDataset) {
        let cut = ((self.len() as f64) * fraction).round() as usize;
        let cut = cut.min(self.len());
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }
}

/// Standardisation and label-scaling constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub rate_min: f64,
    pub rate_max: f64,
    pub label_ceiling: f64,
}

impl NormMeta {
    /// Per-column z-score constants and a linear label map sending the
    /// minimum rate to 0 and the maximum to [`LABEL_CEILING`].
    pub fn fit(raw: &RawDataset) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let n = raw.len() as f64;
        let cols = raw.features.cols();
        let mut mean = vec![0.0; cols];
        for row in raw.features.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for row in raw.features.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let rate_min = raw.rates.iter().copied().fold(f64::INFINITY, f64::min);
        let rate_max = raw.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            feature_mean: mean,
            feature_std: std,
            rate_min,
            rate_max,
            label_ceiling: LABEL_CEILING,
        })
    }

    pub fn label(&self, rate: f64) -> f64 {
        let span = self.rate_max - self.rate_min;
        if span > 0.0 {
            (rate - self.rate_min) / span * self.label_ceiling
        } else {
            0.0
        }
    }

    pub fn rate(&self, label: f64) -> f64 {
        self.rate_min + label / self.label_ceiling * (self.rate_max - self.rate_min)
    }

    pub fn standardize(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out
            .iter_mut()
            .zip(row)
            .zip(&self.feature_mean)
            .zip(&self.feature_std)
        {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, raw: &RawDataset) -> Result<Dataset> {
        Error::check_dim(self.feature_mean.len(), raw.features.cols())?;
        let mut features = raw.features.clone();
        for r in 0..features.rows() {
            let src = raw.features.row(r);
            self.standardize(src, features.row_mut(r));
        }
        Ok(Dataset {
            features,
            labels: raw.rates.iter().map(|&r| self.label(r)).collect(),
            norm_meta: self.clone(),
            scenario: raw.scenario.clone(),
        })
    }
}

/// Model-ready rows: standardised pilots and normalised best-beam rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<f64>,
    pub norm_meta: NormMeta,
    pub scenario: ScenarioParams,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            norm_meta: self.norm_meta.clone(),
            scenario: self.scenario.clone(),
        }
    }

    /// Same labels and metadata with replaced feature rows.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        Error::check_dim(self.len(), features.rows())?;
        Error::check_dim(self.num_features(), features.cols())?;
        Ok(Dataset {
            features,
            labels: self.labels.clone(),
            norm_meta: self.norm_meta.clone(),
            scenario: self.scenario.clone(),
        })
    }
}

struct Instance {
    features: Vec<f64>,
    rate: f64,
    position: Point,
    beams: Vec<usize>,
}

fn simulate_instance(params: &ScenarioParams, codebook: &Codebook, index: u64) -> Result<Instance> {
    let mut rng = rng::child(params.seed, index);
    let grid = &params.user_grid;
    let position = grid.point(rng.random_range(0..grid.len()));
    let channel = generate_channels(params, position)?;
    if !channel.is_finite() {
        return Err(Error::NonFinite(format!("channel at {position:?}")));
    }
    let features = pilot_features(&channel, params, &mut rng);
    let mut rate = 0.0;
    let mut beams = Vec::with_capacity(params.num_bs);
    for h in &channel.h {
        let h: &[Vec<Complex64>] = h;
        let (idx, r) = best_beam(h, codebook, params.snr_linear)?;
        rate += r;
        beams.push(idx);
    }
    Ok(Instance {
        features,
        rate,
        position,
        beams,
    })
}

/// Samples `num_instances` user positions (with replacement) and records their
/// pilots and best-beam sum rates. Instance `i` uses child stream `i` of
/// `params.seed`, so the output does not depend on the worker count.
pub fn build_raw(params: &ScenarioParams, num_instances: usize) -> Result<RawDataset> {
    if num_instances == 0 {
        return Err(Error::InvalidArgument("num_instances must be positive".into()));
    }
    params.validate()?;
    if params.user_grid.is_empty() {
        return Err(Error::config("scenario_params.user_grid", "grid has no points"));
    }
    let codebook = dft_codebook(params.num_antennas, params.oversampling)?;
    let instances: Vec<Instance> = (0..num_instances as u64)
        .into_par_iter()
        .map(|i| simulate_instance(params, &codebook, i))
        .collect::<Result<_>>()?;
    let cols = 2 * params.num_subcarriers * params.num_bs;
    let mut features = Vec::with_capacity(num_instances * cols);
    let mut rates = Vec::with_capacity(num_instances);
    let mut positions = Vec::with_capacity(num_instances);
    let mut best_beams = Vec::with_capacity(num_instances);
    for inst in instances {
        features.extend_from_slice(&inst.features);
        rates.push(inst.rate);
        positions.push(inst.position);
        best_beams.push(inst.beams);
    }
    Ok(RawDataset {
        features: Matrix::from_vec(num_instances, cols, features)?,
        rates,
        positions,
        best_beams,
        scenario: params.clone(),
    })
}

/// Raw generation followed by normalisation fitted on the whole set.
pub fn build_dataset(params: &ScenarioParams, num_instances: usize) -> Result<Dataset> {
    let raw = build_raw(params, num_instances)?;
    NormMeta::fit(&raw)?.apply(&raw)
}
