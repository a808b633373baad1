//! Image-method multipath between base stations and a user.
//!
//! Each BS sees the line-of-sight ray plus one specular bounce per wall
//! segment (when `max_reflections = 1`). Path gains follow free-space
//! `λ / (4π d)` scaled by the reflection coefficient per bounce.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::codebook::phase_ramp;
use super::params::{Point, ScenarioParams, Wall, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

const MIN_SEPARATION_M: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    /// Departure angle from array broadside, folded into `(-π/2, π/2)`.
    pub aod_rad: f64,
    pub delay_s: f64,
    pub length_m: f64,
    pub bounces: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `h[bs][subcarrier][antenna]`.
    pub h: Vec<Vec<Vec<Complex64>>>,
    pub paths: Vec<Vec<Path>>,
    /// True when no path reaches the user from that BS.
    pub blocked: Vec<bool>,
}

impl ChannelRealization {
    pub fn is_finite(&self) -> bool {
        self.h
            .iter()
            .flatten()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Parameters `(t, s)` where `p + t·r = q + s·e`, if the segments cross.
fn segment_intersection(p: Point, p2: Point, q: Point, q2: Point) -> Option<(f64, f64)> {
    let r = sub(p2, p);
    let e = sub(q2, q);
    let denom = cross(r, e);
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = sub(q, p);
    let t = cross(qp, e) / denom;
    let s = cross(qp, r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s)).then_some((t, s))
}

/// Strictly interior crossing, so touching a wall at a leg endpoint is fine.
fn blocked_by(walls: &[Wall], from: Point, to: Point, skip: Option<usize>) -> bool {
    const EDGE: f64 = 1e-9;
    walls.iter().enumerate().any(|(i, w)| {
        Some(i) != skip
            && segment_intersection(from, to, w.a, w.b)
                .is_some_and(|(t, _)| t > EDGE && t < 1.0 - EDGE)
    })
}

fn mirror(p: Point, w: &Wall) -> Point {
    let d = sub(w.b, w.a);
    let len2 = d[0] * d[0] + d[1] * d[1];
    let ap = sub(p, w.a);
    let t = (ap[0] * d[0] + ap[1] * d[1]) / len2;
    let foot = [w.a[0] + t * d[0], w.a[1] + t * d[1]];
    [2.0 * foot[0] - p[0], 2.0 * foot[1] - p[1]]
}

/// Angle from +x, folded so that front and back of the ULA coincide.
fn departure_angle(dir: Point) -> f64 {
    let a = dir[1].atan2(dir[0]);
    if a > FRAC_PI_2 {
        PI - a
    } else if a < -FRAC_PI_2 {
        -PI - a
    } else {
        a
    }
}

fn path(length: f64, dir: Point, bounces: u32, params: &ScenarioParams) -> Path {
    let lambda = params.carrier_wavelength_m;
    let amplitude =
        params.reflection_coeff.powi(bounces as i32) * lambda / (4.0 * PI * length);
    Path {
        gain: Complex64::from_polar(amplitude, -2.0 * PI * length / lambda),
        aod_rad: departure_angle(dir),
        delay_s: length / SPEED_OF_LIGHT,
        length_m: length,
        bounces,
    }
}

/// Rays from one BS to the user.
pub fn trace_paths(params: &ScenarioParams, bs: Point, user: Point) -> Vec<Path> {
    let walls = &params.wall_lines;
    let mut paths = Vec::new();
    if !blocked_by(walls, bs, user, None) {
        paths.push(path(norm(sub(user, bs)), sub(user, bs), 0, params));
    }
    if params.max_reflections >= 1 {
        for (i, w) in walls.iter().enumerate() {
            let image = mirror(bs, w);
            let Some((t, _)) = segment_intersection(image, user, w.a, w.b) else {
                continue;
            };
            if t <= 1e-9 || t >= 1.0 - 1e-9 {
                continue;
            }
            let hit = [
                image[0] + t * (user[0] - image[0]),
                image[1] + t * (user[1] - image[1]),
            ];
            // BS and user must sit on the same side of the wall.
            let side = |p: Point| cross(sub(w.b, w.a), sub(p, w.a));
            if side(bs) * side(user) <= 0.0 {
                continue;
            }
            if blocked_by(walls, bs, hit, Some(i)) || blocked_by(walls, hit, user, Some(i)) {
                continue;
            }
            paths.push(path(norm(sub(user, image)), sub(hit, bs), 1, params));
        }
    }
    paths
}

/// Frequency-domain channel of every BS toward `user_pos`:
/// `h_{k,n} = Σ_l α_l e^{-j2π k τ_l B/K} √M a(φ_l)`.
pub fn generate_channels(params: &ScenarioParams, user_pos: Point) -> Result<ChannelRealization> {
    if !params.user_grid.contains(user_pos) {
        return Err(Error::InvalidArgument(format!(
            "user position {user_pos:?} outside the user grid"
        )));
    }
    let m = params.num_antennas;
    let k_count = params.num_subcarriers;
    let spacing = params.bandwidth_hz / k_count as f64;
    let array_gain = (m as f64).sqrt();
    let mut out = ChannelRealization {
        h: Vec::with_capacity(params.num_bs),
        paths: Vec::with_capacity(params.num_bs),
        blocked: Vec::with_capacity(params.num_bs),
    };
    for &bs in &params.bs_positions {
        if norm(sub(user_pos, bs)) < MIN_SEPARATION_M {
            return Err(Error::InvalidArgument(format!(
                "user at {user_pos:?} is collocated with a base station"
            )));
        }
        let paths = trace_paths(params, bs, user_pos);
        let mut h = vec![vec![Complex64::new(0.0, 0.0); m]; k_count];
        for p in &paths {
            let response = phase_ramp(p.aod_rad.sin(), m);
            for (k, hk) in h.iter_mut().enumerate() {
                let coeff = p.gain
                    * Complex64::from_polar(array_gain, -2.0 * PI * k as f64 * p.delay_s * spacing);
                for (dst, a) in hk.iter_mut().zip(&response) {
                    *dst += coeff * a;
                }
            }
        }
        out.blocked.push(paths.is_empty());
        out.h.push(h);
        out.paths.push(paths);
    }
    Ok(out)
}
