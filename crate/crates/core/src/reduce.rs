//! Scaling of symbols, column operations on moment matrices, and recovery of
//! the delta combination behind a finite-rank moment matrix.
//!
//! Multiplying the symbol by an antianalytic polynomial `p(z̄)` mixes columns,
//! and taking a `∂̄`-antiderivative divides columns by `-k'` and shifts them
//! left. Neither operation can raise the rank. Recovery alternates the two:
//! find the polynomial of least degree whose conjugate annihilates the
//! leading columns, multiply by it, integrate, and repeat until the working
//! matrix vanishes. The support lies among the roots of the step polynomials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FockError, Result};
use crate::evaluator::{ExactEvaluator, FormEvaluator};
use crate::fock::monomial_norm_sq;
use crate::moments::{MomentMatrix, Provenance, DEFAULT_RANK_TOL};
use crate::symbol::{monomial_derivative, DeltaAtom, DeltaCombination, DeltaOp, Symbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub t: f64,
}

impl ScalingParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(FockError::BadParams(format!("scaling parameter must be positive, got {t}")));
        }
        Ok(Self { t })
    }
}

/// The symbol whose weighted form is `W_t 𝐅`, where `⟨W_t 𝐅, ψ⟩ = ⟨𝐅, t⁻¹ψ(·/t)⟩`.
///
/// A delta at `z₀` goes to `t⁻¹ δ_{z₀/t}`; a derivative of order `α + β`
/// picks up a further `t^{-α-β}`.
pub fn scale_symbol(symbol: &Symbol, t: f64) -> Result<Symbol> {
    let ScalingParams { t } = ScalingParams::new(t)?;
    match symbol {
        Symbol::Delta(d) => Ok(Symbol::Delta(d.scaled(t)?)),
        Symbol::PolyGaussian(p) => Ok(Symbol::PolyGaussian(p.scaled(t)?)),
        _ => Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "scale_symbol" }),
    }
}

/// Ranks of the `n × n` moment matrices before and after scaling.
pub fn moment_matrix_scale_check(symbol: &Symbol, t: f64, n: usize) -> Result<(usize, usize)> {
    let scaled = scale_symbol(symbol, t)?;
    let before = ExactEvaluator.moment_matrix(symbol, n)?.rank(DEFAULT_RANK_TOL).rank;
    let after = ExactEvaluator.moment_matrix(&scaled, n)?.rank(DEFAULT_RANK_TOL).rank;
    Ok((before, after))
}

/// Moments of `p(z̄) 𝐅` with `p(w) = Σ γ_j w^j`: `m'_{k,k'} = Σ_j γ_j m_{k,k'+j}`.
pub fn multiply_antianalytic_moments(m: &MomentMatrix, gamma: &[Complex64]) -> Result<MomentMatrix> {
    if gamma.is_empty() {
        return Err(FockError::BadParams("polynomial needs at least one coefficient".into()));
    }
    let deg = gamma.len() - 1;
    if m.cols() <= deg {
        return Err(FockError::InsufficientColumns { have: m.cols(), need: deg + 1 });
    }
    let width = m.cols() - deg;
    let entries = DMatrix::from_fn(m.rows(), width, |k, c| {
        gamma.iter().enumerate().map(|(j, g)| g * m.entries[(k, c + j)]).sum()
    });
    Ok(MomentMatrix { entries, col_offset: m.col_offset, provenance: m.provenance, precision: m.precision })
}

/// Moments of the `∂̄`-antiderivative: `m'_{k,k'-1} = -m_{k,k'}/k'`.
///
/// The leading input column has no partner in the output and is dropped, so
/// the width shrinks by one and the column offset is kept.
pub fn dbar_antiderivative_moments(m: &MomentMatrix) -> Result<MomentMatrix> {
    if m.cols() < 2 {
        return Err(FockError::InsufficientColumns { have: m.cols(), need: 2 });
    }
    let off = m.col_offset;
    let entries = DMatrix::from_fn(m.rows(), m.cols() - 1, |k, c| {
        let kp = off + c + 1;
        -m.entries[(k, c + 1)] / kp as f64
    });
    Ok(MomentMatrix { entries, col_offset: off, provenance: m.provenance, precision: m.precision })
}

/// `p(z) = Σ γ_j z^j` whose conjugate coefficients annihilate the leading
/// columns: `Σ_j γ̄_j m_{k, off+j} ≈ 0` for every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnihilatingPolynomial {
    #[serde(serialize_with = "ser_complex_vec")]
    pub coeffs: Vec<Complex64>,
    pub degree: usize,
    pub defect: f64,
}

impl AnnihilatingPolynomial {
    pub fn conj_coeffs(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.conj()).collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn roots(&self) -> Vec<Complex64> {
        poly_roots(&self.coeffs)
    }
}

/// Least-degree annihilating polynomial, made monic.
///
/// Column blocks of growing width are tested in the orthonormal monomial
/// basis, where the block is judged singular once its smallest singular
/// value drops below `tol` times the norm of the whole normalized matrix.
/// The null vector is mapped back to raw coefficients and the raw defect is
/// reported alongside.
pub fn annihilating_polynomial(m: &MomentMatrix, tol: f64) -> Result<AnnihilatingPolynomial> {
    if m.cols() < 2 {
        return Err(FockError::InsufficientColumns { have: m.cols(), need: 2 });
    }
    let normalized = m.normalized();
    let scale = normalized.norm();
    if scale == 0.0 {
        // every column vanishes already
        return Ok(AnnihilatingPolynomial { coeffs: vec![Complex64::new(1.0, 0.0)], degree: 0, defect: 0.0 });
    }
    for width in 1..=m.cols() {
        let block = normalized.columns(0, width).into_owned();
        let Some((sigma, v)) = smallest_right_singular(&block) else { continue };
        if sigma > tol * scale {
            continue;
        }
        // the null vector of the normalized block gives γ̄ after undoing the column scaling
        let gamma_bar: Vec<Complex64> =
            (0..width).map(|j| v[j] / monomial_norm_sq(m.col_offset + j).map(f64::sqrt).unwrap_or(f64::INFINITY)).collect();
        let mut coeffs: Vec<Complex64> = gamma_bar.iter().map(|g| g.conj()).collect();
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() <= tol * peak) {
            coeffs.pop();
        }
        let lead = *coeffs.last().expect("nonempty");
        for c in coeffs.iter_mut() {
            *c /= lead;
        }
        let defect = column_defect(m, &coeffs);
        return Ok(AnnihilatingPolynomial { degree: coeffs.len() - 1, coeffs, defect });
    }
    Err(FockError::NoAnnihilator)
}

fn column_defect(m: &MomentMatrix, coeffs: &[Complex64]) -> f64 {
    (0..m.rows())
        .map(|k| coeffs.iter().enumerate().map(|(j, g)| g.conj() * m.entries[(k, j)]).sum::<Complex64>().norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn smallest_right_singular(block: &DMatrix<Complex64>) -> Option<(f64, DVector<Complex64>)> {
    let width = block.ncols();
    if block.nrows() < width {
        // wide block: a null vector always exists; pad with zero rows
        let mut padded = DMatrix::zeros(width, width);
        padded.view_mut((0, 0), (block.nrows(), width)).copy_from(block);
        return smallest_right_singular(&padded);
    }
    let svd = block.clone().svd(false, true);
    let v_t = svd.v_t?;
    let (idx, sigma) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    Some((*sigma, v_t.row(idx).transpose().map(|c| c.conj())))
}

/// Roots of `Σ c_j z^j` from the companion matrix, polished by Newton steps.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().map_or(false, |x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -c[deg - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = companion.schur().eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>()).unwrap_or_default();
    let dc: Vec<Complex64> = (1..=deg).map(|j| c[j] * j as f64).collect();
    eig.into_iter()
        .map(|mut z| {
            for _ in 0..3 {
                let p = c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, x| acc * z + x);
                let dp = dc.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, x| acc * z + x);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect()
}

/// Merges points closer than `radius`, averaging each cluster.
pub fn cluster_points(points: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for p in points {
        if let Some((sum, n)) = clusters.iter_mut().find(|(s, n)| (s / *n as f64 - p).norm() < radius) {
            *sum += p;
            *n += 1;
        } else {
            clusters.push((*p, 1));
        }
    }
    clusters.into_iter().map(|(s, n)| s / n as f64).collect()
}

pub const CLUSTER_RADIUS: f64 = 1e-6;
/// Floor on the tolerance used for matrices computed by quadrature.
pub const QUADRATURE_TOL_FLOOR: f64 = 1e-6;
/// Fitted op coefficients below this fraction of the largest are pruned.
const PRUNE_REL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_steps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryStep {
    pub polynomial: AnnihilatingPolynomial,
    /// Frobenius norm of the working matrix after the step.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub points: Vec<Complex64>,
    pub steps: Vec<RecoveryStep>,
    pub terminal_norm: f64,
    /// Fitted weighted combination, one atom per entry of `points`.
    pub coefficients_fit: DeltaCombination,
    /// `‖M - 𝔓(fit)‖ / ‖M‖`.
    pub residual: f64,
}

impl RecoveryResult {
    /// Coefficient of the plain delta at each point.
    pub fn coeffs(&self) -> Vec<Complex64> {
        self.coefficients_fit
            .atoms
            .iter()
            .map(|a| a.ops.iter().filter(|o| o.alpha == 0 && o.beta == 0).map(|o| o.coeff).sum())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = RecoveryDoc {
            points: self.points.iter().map(|z| [z.re, z.im]).collect(),
            coeffs: self.coeffs().iter().map(|z| [z.re, z.im]).collect(),
            steps: self.steps.len(),
            terminal_norm: self.terminal_norm,
            residual: self.residual,
            ops: self
                .coefficients_fit
                .atoms
                .iter()
                .map(|a| a.ops.iter().map(|o| OpDoc { alpha: o.alpha, beta: o.beta, coeff: [o.coeff.re, o.coeff.im] }).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("recovery serialization")
    }
}

#[derive(Serialize)]
struct RecoveryDoc {
    points: Vec<[f64; 2]>,
    coeffs: Vec<[f64; 2]>,
    steps: usize,
    terminal_norm: f64,
    residual: f64,
    ops: Vec<Vec<OpDoc>>,
}

#[derive(Serialize)]
struct OpDoc {
    alpha: u32,
    beta: u32,
    coeff: [f64; 2],
}

fn ser_complex_vec<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Recovers `𝐅 = Σ_j 𝓛_j δ_{z_j}` from its moment matrix.
///
/// Step polynomials may carry roots outside the support when derivative
/// atoms are present; the fit allows ops of order at most one at every
/// candidate point and then prunes the points whose coefficients vanish.
pub fn recover_deltas(m: &MomentMatrix, opts: RecoveryOptions) -> Result<RecoveryResult> {
    if !(opts.tol > 0.0) {
        return Err(FockError::BadParams(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let tol = match m.provenance {
        Provenance::Exact => opts.tol,
        Provenance::Quadrature => opts.tol.max(QUADRATURE_TOL_FLOOR),
    };
    let threshold = tol * m.norm();
    let mut work = m.clone();
    let mut steps = Vec::new();
    let mut candidates = Vec::new();
    while work.norm() > threshold {
        if steps.len() == opts.max_steps {
            return Err(FockError::DidNotTerminate { steps: steps.len(), norm: work.norm() });
        }
        let poly = annihilating_polynomial(&work, tol)?;
        candidates.extend(poly.roots());
        let multiplied = multiply_antianalytic_moments(&work, &poly.conj_coeffs())?;
        work = dbar_antiderivative_moments(&multiplied)?;
        steps.push(RecoveryStep { polynomial: poly, norm: work.norm() });
    }
    let points = cluster_points(&candidates, CLUSTER_RADIUS);
    let (fit, residual) = fit_coefficients(m, &points)?;
    let points = fit.atoms.iter().map(|a| a.point).collect();
    Ok(RecoveryResult { points, steps, terminal_norm: work.norm(), coefficients_fit: fit, residual })
}

const FIT_OPS: [(u32, u32); 3] = [(0, 0), (1, 0), (0, 1)];

/// Least-squares fit of order-≤1 ops at fixed points, in the normalized basis,
/// pruning negligible ops until the active set is stable.
fn fit_coefficients(m: &MomentMatrix, points: &[Complex64]) -> Result<(DeltaCombination, f64)> {
    let mut active: Vec<(Complex64, u32, u32)> =
        points.iter().flat_map(|p| FIT_OPS.iter().map(move |&(a, b)| (*p, a, b))).collect();
    let (rows, cols, off) = (m.rows(), m.cols(), m.col_offset);
    let target = m.normalized();
    let rhs = DVector::from_fn(rows * cols, |r, _| target[(r / cols, r % cols)]);
    loop {
        if active.is_empty() {
            return Ok(assemble(m, &[], &[]));
        }
        let design = DMatrix::from_fn(rows * cols, active.len(), |r, c| {
            let (k, j) = (r / cols, r % cols);
            let (p, a, b) = active[c];
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let norm = (monomial_norm_sq(k).unwrap_or(f64::INFINITY) * monomial_norm_sq(off + j).unwrap_or(f64::INFINITY)).sqrt();
            monomial_derivative(k as u32, (off + j) as u32, a, b, p) * (sign / norm)
        });
        let x = design
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| FockError::BadParams(format!("coefficient fit failed: {e}")))?;
        let peak = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let keep: Vec<bool> = x.iter().map(|c| c.norm() > PRUNE_REL * peak).collect();
        if keep.iter().all(|k| *k) {
            return Ok(assemble(m, &active, x.as_slice()));
        }
        active = active.into_iter().zip(keep).filter(|(_, k)| *k).map(|(a, _)| a).collect();
    }
}

fn assemble(m: &MomentMatrix, active: &[(Complex64, u32, u32)], x: &[Complex64]) -> (DeltaCombination, f64) {
    let m_norm = m.norm();
    let mut atoms: Vec<DeltaAtom> = Vec::new();
    for (&(p, a, b), c) in active.iter().zip(x) {
        let op = DeltaOp { alpha: a, beta: b, coeff: *c };
        match atoms.iter_mut().find(|at| at.point == p) {
            Some(at) => at.ops.push(op),
            None => atoms.push(DeltaAtom { point: p, ops: vec![op] }),
        }
    }
    let fit = DeltaCombination { atoms, ..Default::default() };
    let mut diff = 0.0;
    for k in 0..m.rows() {
        for j in 0..m.cols() {
            diff += (m.entries[(k, j)] - fit.moment(k as u32, (m.col_offset + j) as u32)).norm_sqr();
        }
    }
    let residual = if m_norm == 0.0 { diff.sqrt() } else { diff.sqrt() / m_norm };
    (fit, residual)
}
