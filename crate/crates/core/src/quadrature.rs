//! Polar product quadrature over disks in the complex plane.
//!
//! Radial nodes are Gauss–Legendre on `[0, R]`, angular nodes are a uniform
//! trapezoid rule. Each node carries its area weight including the Jacobian
//! `r`, so integrands are written directly in Cartesian `z`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{FockError, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess followed by Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Truncation radius for moments up to monomial order `k_max`.
pub fn default_radius(k_max: usize) -> f64 {
    8f64.max(2.0 + ((k_max + 20) as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub radius: f64,
    pub n_r: usize,
    pub n_t: usize,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    /// Flattened nodes `(z_i, w_i)` with `w_i` the area weight.
    pub nodes: Vec<(Complex64, f64)>,
}

pub fn build_polar_rule(radius: f64, n_r: usize, n_t: usize) -> Result<QuadRule> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FockError::BadParams(format!("radius must be positive, got {radius}")));
    }
    if n_r < 4 {
        return Err(FockError::BadParams(format!("n_r must be at least 4, got {n_r}")));
    }
    if n_t < 8 || n_t % 2 != 0 {
        return Err(FockError::BadParams(format!("n_t must be even and at least 8, got {n_t}")));
    }
    let (rs, rw) = gauss_legendre_on(n_r, 0.0, radius);
    let dtheta = 2.0 * PI / n_t as f64;
    let mut nodes = Vec::with_capacity(n_r * n_t);
    for (r, w) in rs.iter().zip(&rw) {
        for j in 0..n_t {
            nodes.push((Complex64::from_polar(*r, j as f64 * dtheta), w * r * dtheta));
        }
    }
    Ok(QuadRule { radius, n_r, n_t, radial_nodes: rs, radial_weights: rw, nodes })
}

impl QuadRule {
    /// Same radius, node counts doubled in both directions.
    pub fn refined(&self) -> QuadRule {
        build_polar_rule(self.radius, 2 * self.n_r, 2 * self.n_t).expect("refining a valid rule")
    }
}

/// Pairwise (tree) summation; the order is fixed by the slice layout.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `Σ w_i f(z_i)` over the rule.
pub fn integrate<F>(f: F, rule: &QuadRule) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let terms: Vec<Complex64> = rule.nodes.par_iter().map(|(z, w)| f(*z) * *w).collect();
    if let Some(i) = terms.iter().position(|t| !t.re.is_finite() || !t.im.is_finite()) {
        let z = rule.nodes[i].0;
        return Err(FockError::NonFiniteValue { re: z.re, im: z.im });
    }
    Ok(pairwise_sum(&terms))
}
