use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ULA response toward `angle_rad`, entries `e^{jπ m sin θ} / √M`.
pub fn steering_vector(angle_rad: f64, m: usize) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("array needs at least one element".into()));
    }
    Ok(phase_ramp(angle_rad.sin(), m))
}

/// `e^{jπ m u} / √M` for a direction cosine `u`.
pub(crate) fn phase_ramp(u: f64, m: usize) -> Vec<Complex64> {
    let norm = 1.0 / (m as f64).sqrt();
    (0..m)
        .map(|i| Complex64::from_polar(norm, PI * i as f64 * u))
        .collect()
}

/// Quantised set of analogue beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub vectors: Vec<Vec<Complex64>>,
    /// Steering angle of each beam in radians (`asin` of its direction cosine).
    pub angles: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn num_antennas(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// `M · oversampling` beams whose direction cosines tile `[-1, 1)` uniformly.
pub fn dft_codebook(m: usize, oversampling: usize) -> Result<Codebook> {
    if m == 0 || oversampling == 0 {
        return Err(Error::InvalidArgument(
            "codebook needs positive size and oversampling".into(),
        ));
    }
    let count = m * oversampling;
    let (vectors, angles) = (0..count)
        .map(|p| {
            let u = -1.0 + 2.0 * p as f64 / count as f64;
            (phase_ramp(u, m), u.asin())
        })
        .unzip();
    Ok(Codebook { vectors, angles })
}
