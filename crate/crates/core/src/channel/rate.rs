use num_complex::Complex64;

use super::codebook::Codebook;
use crate::error::{Error, Result};

/// `hᵀ g` (no conjugation).
#[inline]
pub fn beam_response(h: &[Complex64], g: &[Complex64]) -> Complex64 {
    h.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Mean spectral efficiency over subcarriers, `(1/K) Σ_k log2(1 + SNR |h_kᵀ g|²)`.
pub fn achievable_rate(h: &[Vec<Complex64>], g: &[Complex64], snr_linear: f64) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Empty("channel subcarriers"));
    }
    if !(snr_linear >= 0.0) {
        return Err(Error::InvalidArgument("snr must be nonnegative".into()));
    }
    let mut total = 0.0;
    for hk in h {
        Error::check_dim(g.len(), hk.len())?;
        total += (snr_linear * beam_response(hk, g).norm_sqr()).ln_1p();
    }
    Ok(total / (h.len() as f64 * std::f64::consts::LN_2))
}

/// Index and rate of the best beam; ties go to the lowest index.
pub fn best_beam(h: &[Vec<Complex64>], codebook: &Codebook, snr_linear: f64) -> Result<(usize, f64)> {
    if codebook.is_empty() {
        return Err(Error::Empty("codebook"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (p, g) in codebook.vectors.iter().enumerate() {
        let r = achievable_rate(h, g, snr_linear)?;
        if r > best.1 {
            best = (p, r);
        }
    }
    Ok(best)
}

/// Fraction of the beam coherence time left for data, `1 − T_tr / T_B`.
pub fn effective_rate_factor(t_tr: f64, t_b: f64) -> Result<f64> {
    if !(t_b > 0.0) || !(t_tr >= 0.0) || t_tr >= t_b {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= t_tr < t_b, got t_tr={t_tr}, t_b={t_b}"
        )));
    }
    Ok(1.0 - t_tr / t_b)
}

/// Single-BS term of the received subcarrier sample, `h_kᵀ f · c · s + v`.
pub fn downlink_signal(
    h_k: &[Complex64],
    f: &[Complex64],
    c_kn: Complex64,
    s_k: Complex64,
    noise: Complex64,
) -> Result<Complex64> {
    Error::check_dim(h_k.len(), f.len())?;
    Ok(beam_response(h_k, f) * c_kn * s_k + noise)
}
