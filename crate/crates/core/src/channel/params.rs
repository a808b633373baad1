use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point = [f64; 2];

/// Rectangle of candidate user positions sampled on a regular lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub spacing: f64,
}

impl UserGrid {
    fn axis(lo: f64, hi: f64, step: f64) -> usize {
        ((hi - lo) / step + 1e-9).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::axis(self.x_min, self.x_max, self.spacing)
    }

    pub fn ny(&self) -> usize {
        Self::axis(self.y_min, self.y_max, self.spacing)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice point `index`, x-major.
    pub fn point(&self, index: usize) -> Point {
        let ny = self.ny();
        let (ix, iy) = (index / ny, index % ny);
        [
            self.x_min + ix as f64 * self.spacing,
            self.y_min + iy as f64 * self.spacing,
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-9;
        p[0] >= self.x_min - tol
            && p[0] <= self.x_max + tol
            && p[1] >= self.y_min - tol
            && p[1] <= self.y_max + tol
    }
}

/// Reflecting line segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
}

/// Geometry, radio and timing parameters of one simulated deployment.
///
/// `snr_linear` is the transmit power over receiver noise power; the channel
/// coefficients already carry free-space path loss, so realistic values are
/// large (the default corresponds to about 10 dB post-beamforming SNR in the
/// middle of the user grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub num_bs: usize,
    /// Elements of each base-station ULA (half-wavelength spacing, axis along y).
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub bandwidth_hz: f64,
    pub carrier_wavelength_m: f64,
    pub bs_positions: Vec<Point>,
    pub user_grid: UserGrid,
    pub wall_lines: Vec<Wall>,
    pub reflection_coeff: f64,
    pub max_reflections: u32,
    /// DFT codebook oversampling factor.
    pub oversampling: usize,
    pub snr_linear: f64,
    /// Pilot noise variance, in the same units as `|h|²`.
    pub noise_variance: f64,
    pub t_tr: f64,
    pub t_b: f64,
    /// Channel coherence time; informational only.
    pub t_c: f64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_bs: 1,
            num_antennas: 16,
            num_subcarriers: 8,
            bandwidth_hz: 25e6,
            carrier_wavelength_m: SPEED_OF_LIGHT / 28e9,
            bs_positions: vec![[0.0, 0.0]],
            user_grid: UserGrid {
                x_min: 30.0,
                x_max: 50.0,
                y_min: -8.0,
                y_max: 8.0,
                spacing: 0.25,
            },
            wall_lines: vec![
                Wall {
                    a: [-50.0, 20.0],
                    b: [250.0, 20.0],
                },
                Wall {
                    a: [-50.0, -20.0],
                    b: [250.0, -20.0],
                },
            ],
            reflection_coeff: 0.7,
            max_reflections: 1,
            oversampling: 8,
            snr_linear: 10f64.powf(9.5),
            noise_variance: 0.0,
            t_tr: 0.1e-3,
            t_b: 10e-3,
            t_c: 1e-3,
            seed: 0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("scenario_params.{field}"), msg))
            }
        };
        positive(self.num_bs >= 1, "num_bs", "must be at least 1")?;
        positive(
            self.bs_positions.len() == self.num_bs,
            "bs_positions",
            "needs exactly num_bs entries",
        )?;
        positive(self.num_antennas >= 1, "num_antennas", "must be at least 1")?;
        positive(self.num_subcarriers >= 1, "num_subcarriers", "must be at least 1")?;
        positive(self.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive")?;
        positive(
            self.carrier_wavelength_m > 0.0,
            "carrier_wavelength_m",
            "must be positive",
        )?;
        positive(
            self.reflection_coeff > 0.0 && self.reflection_coeff <= 1.0,
            "reflection_coeff",
            "must lie in (0, 1]",
        )?;
        positive(self.max_reflections <= 1, "max_reflections", "must be 0 or 1")?;
        positive(self.oversampling >= 1, "oversampling", "must be at least 1")?;
        positive(self.snr_linear > 0.0, "snr_linear", "must be positive")?;
        positive(self.noise_variance >= 0.0, "noise_variance", "must be nonnegative")?;
        positive(self.t_b > 0.0, "t_b", "must be positive")?;
        positive(
            self.t_tr >= 0.0 && self.t_tr < self.t_b,
            "t_tr",
            "must satisfy 0 <= t_tr < t_b",
        )?;
        let g = &self.user_grid;
        positive(g.spacing > 0.0, "user_grid.spacing", "must be positive")?;
        positive(
            g.x_max >= g.x_min && g.y_max >= g.y_min,
            "user_grid",
            "rectangle is empty",
        )?;
        Ok(())
    }
}
