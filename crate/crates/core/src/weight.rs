//! The Gaussian weight, growth classes, and Gaussian decay fitting.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::grid::{apply_tensor, stencil_o4, Grid};

/// `ω(z) = e^{-|z|²} / π`.
pub fn gaussian_weight(z: Complex64) -> f64 {
    (-z.norm_sqr()).exp() / PI
}

/// Growth exponent `q` (multiplying `|z|²`) and smoothness order `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthClass {
    pub q: f64,
    pub l: usize,
}

impl GrowthClass {
    pub fn new(q: f64, l: usize) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(FockError::BadParams(format!("growth exponent must be positive, got {q}")));
        }
        Ok(Self { q, l })
    }
}

/// Least-squares fit of `log|u| ≈ c_hat - q_hat |z|²` over an annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub q_hat: f64,
    pub c_hat: f64,
    /// RMS of the log-residuals.
    pub residual: f64,
    pub annulus: (f64, f64),
}

const MIN_FIT_SAMPLES: usize = 8;
const LOG_FLOOR: f64 = 1e-300;

pub fn decay_fit(samples: &[(Complex64, f64)], annulus: (f64, f64)) -> Result<DecayFit> {
    let (r_min, r_max) = annulus;
    if !(r_min >= 0.0 && r_min < r_max) {
        return Err(FockError::BadParams(format!("annulus ({r_min}, {r_max}) is empty")));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(z, m)| {
            let r = z.norm();
            r >= r_min && r <= r_max && *m >= LOG_FLOOR && m.is_finite()
        })
        .map(|(z, m)| (z.norm_sqr(), m.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(FockError::InsufficientSamples { needed: MIN_FIT_SAMPLES, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-14 * mx.abs().max(1.0).powi(2) * n {
        return Err(FockError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(DecayFit { q_hat: -slope, c_hat: intercept, residual: (rss / n).sqrt(), annulus })
}

/// `sup_z e^{-q|z|²} max_{a+b ≤ l} |∂_x^a ∂_y^b f(z)|` over the grid.
///
/// Derivatives use fourth-order centered stencils; points closer to the edge
/// than the widest stencil are left out of the sup when `l ≥ 1`.
pub fn class_seminorm(samples: &[Complex64], cls: GrowthClass, grid: &Grid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(FockError::BadParams(format!(
            "{} samples for a grid of {} points",
            samples.len(),
            grid.len()
        )));
    }
    if cls.l > 4 {
        return Err(FockError::BadParams(format!("smoothness order {} > 4", cls.l)));
    }
    if cls.l >= 1 && grid.spacing > 0.25 {
        return Err(FockError::GridTooCoarse { spacing: grid.spacing });
    }
    let orders: Vec<(usize, usize)> =
        (0..=cls.l).flat_map(|a| (0..=cls.l - a).map(move |b| (a, b))).collect();
    let layer = orders
        .iter()
        .map(|&(a, b)| stencil_o4(a).radius.max(stencil_o4(b).radius))
        .max()
        .unwrap_or(0);

    let mut sup = 0.0_f64;
    for idx in 0..grid.len() {
        if !grid.is_interior(idx, layer) {
            continue;
        }
        let z = grid.point(idx);
        let mut local = 0.0_f64;
        for &(a, b) in &orders {
            let d = apply_tensor(grid, samples, idx, (stencil_o4(a), a), (stencil_o4(b), b))
                .expect("interior point");
            local = local.max(d.norm());
        }
        sup = sup.max((-cls.q * z.norm_sqr()).exp() * local);
    }
    Ok(sup)
}
