//! Interchangeable backends that evaluate Toeplitz forms into matrices.
//!
//! Each backend implements [`FormEvaluator`] and is registered by name in an
//! [`EvaluatorRegistry`]; callers pick one at runtime (`exact`, `exact-dd`,
//! `quadrature`).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dd::{factorial_dd, falling_dd, ComplexDd, Dd};
use crate::error::{FockError, Result};
use crate::fock::toeplitz_form_exact;
use crate::moments::{KernelMatrix, MomentMatrix, Precision, Provenance};
use crate::quadrature::{build_polar_rule, default_radius, pairwise_sum, QuadRule};
use crate::symbol::Symbol;
use crate::weight::gaussian_weight;

/// Truncation cap for double-precision entries.
pub const MAX_N_DOUBLE: usize = 24;
/// Truncation cap for double-double entries.
pub const MAX_N_EXTENDED: usize = 40;
/// Relative movement allowed when quadrature nodes are doubled.
pub const REFINEMENT_TOL: f64 = 1e-8;

pub trait FormEvaluator: Send + Sync {
    fn name(&self) -> &'static str;

    /// `N × N` truncation of `𝔓(F)` with column offset 0.
    fn moment_matrix(&self, symbol: &Symbol, n: usize) -> Result<MomentMatrix>;

    fn kernel_matrix(&self, symbol: &Symbol, points: &[Complex64]) -> Result<KernelMatrix>;
}

/// Parameters a backend may draw on when it is constructed.
#[derive(Debug, Clone, Default)]
pub struct EvaluatorConfig {
    /// Quadrature radius; defaults to the truncation-dependent radius.
    pub radius: Option<f64>,
    pub n_r: Option<usize>,
    pub n_t: Option<usize>,
}

type Factory = Box<dyn Fn(&EvaluatorConfig) -> Result<Box<dyn FormEvaluator>> + Send + Sync>;

pub struct EvaluatorRegistry {
    factories: BTreeMap<String, Factory>,
}

impl EvaluatorRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Registry with the built-in backends.
    pub fn standard() -> Self {
        let mut reg = Self::empty();
        reg.register("exact", |_| Ok(Box::new(ExactEvaluator)));
        reg.register("exact-dd", |_| Ok(Box::new(ExtendedEvaluator)));
        reg.register("quadrature", |cfg| Ok(Box::new(QuadratureEvaluator::from_config(cfg)?)));
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&EvaluatorConfig) -> Result<Box<dyn FormEvaluator>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, name: &str, cfg: &EvaluatorConfig) -> Result<Box<dyn FormEvaluator>> {
        let factory = self.factories.get(name).ok_or_else(|| FockError::UnknownEvaluator(name.to_string()))?;
        factory(cfg)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

impl Default for EvaluatorRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

fn check_n(n: usize, cap: usize, precision: &'static str) -> Result<()> {
    if n == 0 {
        return Err(FockError::BadParams("truncation size must be at least 1".into()));
    }
    if n > cap {
        return Err(FockError::TruncationTooLarge { n, cap, precision });
    }
    Ok(())
}

/// Kernel-matrix entries of a delta combination:
/// `⟨∂^α∂̄^β δ_{z₀}, e^{w z̄_k + w̄ z_{k'}}⟩ = (-1)^{α+β} z̄_k^α z_{k'}^β e^{z₀ z̄_k + z̄₀ z_{k'}}`.
fn delta_kernel_matrix(symbol: &Symbol, points: &[Complex64]) -> Result<KernelMatrix> {
    let Symbol::Delta(d) = symbol else {
        return Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "closed-form kernel matrix" });
    };
    check_points(points)?;
    let weighted = d.to_weighted();
    let entries = DMatrix::from_fn(points.len(), points.len(), |i, j| {
        let (zk, zkp) = (points[i].conj(), points[j]);
        let mut acc = Complex64::new(0.0, 0.0);
        for atom in &weighted.atoms {
            let e = (atom.point * zk + atom.point.conj() * zkp).exp();
            for op in &atom.ops {
                let sign = if (op.alpha + op.beta) % 2 == 0 { 1.0 } else { -1.0 };
                acc += op.coeff * sign * zk.powu(op.alpha) * zkp.powu(op.beta) * e;
            }
        }
        acc
    });
    Ok(KernelMatrix { points: points.to_vec(), entries, provenance: Provenance::Exact })
}

fn check_points(points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        return Err(FockError::BadParams("kernel matrix needs at least one point".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(FockError::BadParams(format!("repeated kernel point {p}")));
        }
    }
    Ok(())
}

/// Closed-form entries in double precision.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactEvaluator;

impl FormEvaluator for ExactEvaluator {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn moment_matrix(&self, symbol: &Symbol, n: usize) -> Result<MomentMatrix> {
        check_n(n, MAX_N_DOUBLE, "double")?;
        let mut entries = DMatrix::zeros(n, n);
        for k in 0..n {
            for kp in 0..n {
                entries[(k, kp)] = toeplitz_form_exact(symbol, k, kp)?;
            }
        }
        MomentMatrix::new(entries, 0, Provenance::Exact)
    }

    fn kernel_matrix(&self, symbol: &Symbol, points: &[Complex64]) -> Result<KernelMatrix> {
        delta_kernel_matrix(symbol, points)
    }
}

/// Closed-form entries accumulated in double-double before rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtendedEvaluator;

impl ExtendedEvaluator {
    fn entry(symbol: &Symbol, k: u32, kp: u32) -> Result<Complex64> {
        match symbol {
            Symbol::Delta(d) => {
                let mut acc = ComplexDd::ZERO;
                for atom in &d.to_weighted().atoms {
                    let p = ComplexDd::from_c64(atom.point);
                    for op in &atom.ops {
                        if op.alpha > k || op.beta > kp {
                            continue;
                        }
                        let sign = if (op.alpha + op.beta) % 2 == 0 { 1.0 } else { -1.0 };
                        let scale = falling_dd(k, op.alpha) * falling_dd(kp, op.beta) * Dd::from_f64(sign);
                        let term = p.powu(k - op.alpha) * p.conj().powu(kp - op.beta);
                        acc = acc + (term * ComplexDd::from_c64(op.coeff)).scale(scale);
                    }
                }
                Ok(acc.to_c64())
            }
            Symbol::PolyGaussian(pg) => {
                let base = (Dd::ONE + Dd::from_f64(pg.s)).recip();
                let mut acc = ComplexDd::ZERO;
                for t in &pg.terms {
                    if k + t.a != kp + t.b {
                        continue;
                    }
                    let m = k + t.a;
                    let mag = factorial_dd(m) * base.powi(m + 1);
                    acc = acc + ComplexDd::from_c64(t.coeff).scale(mag);
                }
                Ok(acc.to_c64())
            }
            _ => Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "extended-precision moments" }),
        }
    }
}

impl FormEvaluator for ExtendedEvaluator {
    fn name(&self) -> &'static str {
        "exact-dd"
    }

    fn moment_matrix(&self, symbol: &Symbol, n: usize) -> Result<MomentMatrix> {
        check_n(n, MAX_N_EXTENDED, "extended")?;
        let mut entries = DMatrix::zeros(n, n);
        for k in 0..n {
            for kp in 0..n {
                entries[(k, kp)] = Self::entry(symbol, k as u32, kp as u32)?;
            }
        }
        let mut m = MomentMatrix::new(entries, 0, Provenance::Exact)?;
        m.precision = Precision::Extended;
        Ok(m)
    }

    fn kernel_matrix(&self, symbol: &Symbol, points: &[Complex64]) -> Result<KernelMatrix> {
        delta_kernel_matrix(symbol, points)
    }
}

/// Polar-quadrature entries, checked against a rule with doubled node counts.
#[derive(Debug, Clone)]
pub struct QuadratureEvaluator {
    radius: Option<f64>,
    n_r: usize,
    n_t: usize,
}

impl QuadratureEvaluator {
    pub fn new(radius: Option<f64>, n_r: usize, n_t: usize) -> Result<Self> {
        // validate once; the actual rule depends on N when no radius is given
        build_polar_rule(radius.unwrap_or(8.0), n_r, n_t)?;
        Ok(Self { radius, n_r, n_t })
    }

    pub fn from_config(cfg: &EvaluatorConfig) -> Result<Self> {
        Self::new(cfg.radius, cfg.n_r.unwrap_or(64), cfg.n_t.unwrap_or(64))
    }

    pub fn from_rule(rule: &QuadRule) -> Self {
        Self { radius: Some(rule.radius), n_r: rule.n_r, n_t: rule.n_t }
    }

    fn rule_for(&self, k_max: usize) -> Result<QuadRule> {
        let needed = default_radius(k_max);
        let radius = self.radius.unwrap_or(needed);
        if radius < needed {
            return Err(FockError::BadParams(format!(
                "quadrature radius {radius} is below {needed:.4} required for order {k_max}"
            )));
        }
        build_polar_rule(radius, self.n_r, self.n_t)
    }

    /// `Σ_i w_i F(z_i) ω(z_i) u_a(z_i) conj(u_b(z_i))` for every pair of test functions.
    fn gram<U>(symbol: &Symbol, rule: &QuadRule, count: usize, basis: U) -> Result<DMatrix<Complex64>>
    where
        U: Fn(Complex64, usize) -> Complex64,
    {
        let mut weights = Vec::with_capacity(rule.nodes.len());
        for (z, w) in &rule.nodes {
            let f = symbol.eval(*z).expect("function-like symbol") * (w * gaussian_weight(*z));
            if !f.re.is_finite() || !f.im.is_finite() {
                return Err(FockError::NonFiniteValue { re: z.re, im: z.im });
            }
            weights.push(f);
        }
        let values: Vec<Vec<Complex64>> =
            (0..count).map(|a| rule.nodes.iter().map(|(z, _)| basis(*z, a)).collect()).collect();
        let mut out = DMatrix::zeros(count, count);
        let mut terms = vec![Complex64::new(0.0, 0.0); weights.len()];
        for a in 0..count {
            for b in 0..count {
                for (i, t) in terms.iter_mut().enumerate() {
                    *t = weights[i] * values[a][i] * values[b][i].conj();
                }
                out[(a, b)] = pairwise_sum(&terms);
            }
        }
        Ok(out)
    }

    fn refined_gram<U>(symbol: &Symbol, rule: &QuadRule, count: usize, basis: U) -> Result<DMatrix<Complex64>>
    where
        U: Fn(Complex64, usize) -> Complex64 + Copy,
    {
        if let Symbol::Delta(_) = symbol {
            return Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "quadrature evaluation" });
        }
        let coarse = Self::gram(symbol, rule, count, basis)?;
        let fine = Self::gram(symbol, &rule.refined(), count, basis)?;
        let scale = fine.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for a in 0..count {
            for b in 0..count {
                let change = (coarse[(a, b)] - fine[(a, b)]).norm();
                if change > REFINEMENT_TOL * scale {
                    return Err(FockError::QuadratureUnderresolved { row: a, col: b, change: change / scale });
                }
            }
        }
        Ok(coarse)
    }
}

impl FormEvaluator for QuadratureEvaluator {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn moment_matrix(&self, symbol: &Symbol, n: usize) -> Result<MomentMatrix> {
        check_n(n, MAX_N_DOUBLE, "double")?;
        let rule = self.rule_for(2 * n)?;
        let entries = Self::refined_gram(symbol, &rule, n, |z, k| z.powu(k as u32))?;
        MomentMatrix::new(entries, 0, Provenance::Quadrature)
    }

    fn kernel_matrix(&self, symbol: &Symbol, points: &[Complex64]) -> Result<KernelMatrix> {
        check_points(points)?;
        let reach = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        // e^{w z̄} grows like e^{|w||z|}; widen the disk to keep the Gaussian tail negligible
        let rule = self.rule_for(0).and_then(|r| {
            let radius = r.radius.max(2.0 * reach + 8.0);
            build_polar_rule(radius, self.n_r, self.n_t)
        })?;
        let entries = Self::refined_gram(symbol, &rule, points.len(), |w, a| (w * points[a].conj()).exp())?;
        Ok(KernelMatrix { points: points.to_vec(), entries, provenance: Provenance::Quadrature })
    }
}
