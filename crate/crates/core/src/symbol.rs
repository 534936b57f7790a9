//! Symbol representations and their closed-form transformations.
//!
//! A delta combination stores atoms `Σ_j Σ c ∂^α ∂̄^β δ_{z_j}`. By default the
//! atoms describe the weighted symbol `𝐅 = ωF` directly; [`AtomConvention::Unweighted`]
//! marks atoms that describe `F` itself, and [`DeltaCombination::to_weighted`]
//! folds the weight in through the Leibniz rule.
//!
//! Distributional derivatives act by `⟨∂^α∂̄^β δ_{z₀}, φ⟩ = (-1)^{α+β} (∂^α∂̄^β φ)(z₀)`
//! with Wirtinger derivatives `∂ = (∂_x - i∂_y)/2`, `∂̄ = (∂_x + i∂_y)/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::weight::GrowthClass;

pub type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficients below this modulus are treated as zero when simplifying.
const COEFF_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaOp {
    pub alpha: u32,
    pub beta: u32,
    pub coeff: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaAtom {
    pub point: Complex64,
    pub ops: Vec<DeltaOp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomConvention {
    /// Atoms define `𝐅 = ωF`.
    #[default]
    Weighted,
    /// Atoms define `F`; pairings see `ωF`.
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaCombination {
    pub atoms: Vec<DeltaAtom>,
    pub convention: AtomConvention,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyTerm {
    pub a: u32,
    pub b: u32,
    pub coeff: Complex64,
}

/// `Σ coeff · z^a z̄^b e^{-s|z|²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGaussian {
    pub terms: Vec<PolyTerm>,
    pub s: f64,
}

#[derive(Clone)]
pub enum Symbol {
    Smooth { evaluator: ComplexFn, growth: GrowthClass },
    Radial { profile: RadialFn, label: String },
    PolyGaussian(PolyGaussian),
    Delta(DeltaCombination),
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Smooth { growth, .. } => f.debug_struct("Smooth").field("growth", growth).finish(),
            Symbol::Radial { label, .. } => f.debug_struct("Radial").field("label", label).finish(),
            Symbol::PolyGaussian(p) => p.fmt(f),
            Symbol::Delta(d) => d.fmt(f),
        }
    }
}

impl Symbol {
    pub fn zero() -> Self {
        Symbol::Delta(DeltaCombination::default())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Symbol::Smooth { .. } => "smooth",
            Symbol::Radial { .. } => "radial",
            Symbol::PolyGaussian(_) => "polygauss",
            Symbol::Delta(_) => "delta",
        }
    }

    /// Radial Gaussian profile `F(r) = e^{-s r²}`.
    pub fn radial_gauss(s: f64) -> Result<Self> {
        if !(1.0 + s > 0.0) {
            return Err(FockError::InvalidSymbol(format!("radial gaussian needs 1 + s > 0, got s = {s}")));
        }
        Ok(Symbol::Radial { profile: Arc::new(move |r| (-s * r * r).exp()), label: format!("radial:gauss:{s}") })
    }

    pub fn smooth<F>(f: F, growth: GrowthClass) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Symbol::Smooth { evaluator: Arc::new(f), growth }
    }

    /// Pointwise value of `F` for function-like symbols.
    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        match self {
            Symbol::Smooth { evaluator, .. } => Some(evaluator(z)),
            Symbol::Radial { profile, .. } => Some(Complex64::new(profile(z.norm()), 0.0)),
            Symbol::PolyGaussian(p) => Some(p.eval(z)),
            Symbol::Delta(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Symbol::Delta(d) => d.is_zero(),
            Symbol::PolyGaussian(p) => p.terms.iter().all(|t| t.coeff.norm() <= COEFF_EPS),
            _ => false,
        }
    }
}

impl PolyGaussian {
    pub fn new(terms: Vec<PolyTerm>, s: f64) -> Result<Self> {
        if !(1.0 + s > 0.0) || !s.is_finite() {
            return Err(FockError::InvalidSymbol(format!("poly-gaussian needs 1 + s > 0, got s = {s}")));
        }
        Ok(Self { terms, s })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let g = (-self.s * z.norm_sqr()).exp();
        self.terms.iter().map(|t| t.coeff * z.powu(t.a) * z.conj().powu(t.b)).sum::<Complex64>() * g
    }

    /// Weighted rescaling `ω⁻¹ W_t (ωF)`: each term picks up `t^{1+a+b}` and the
    /// Gaussian exponent becomes `(1+s)t² - 1`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        check_scale(t)?;
        let terms = self
            .terms
            .iter()
            .map(|term| PolyTerm { coeff: term.coeff * t.powi(1 + (term.a + term.b) as i32), ..*term })
            .collect();
        PolyGaussian::new(terms, (1.0 + self.s) * t * t - 1.0)
    }
}

fn check_scale(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FockError::BadParams(format!("scaling parameter must be positive, got {t}")));
    }
    Ok(())
}

/// Falling factorial `k (k-1) … (k-j+1)`; zero when `j > k`.
pub fn falling(k: u32, j: u32) -> f64 {
    if j > k {
        return 0.0;
    }
    (k - j + 1..=k).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    falling(n, k) / falling(k, k)
}

/// `∂^α ∂̄^β [z^k z̄^{k'}]` at `z`.
pub fn monomial_derivative(k: u32, kp: u32, alpha: u32, beta: u32, z: Complex64) -> Complex64 {
    if alpha > k || beta > kp {
        return Complex64::new(0.0, 0.0);
    }
    z.powu(k - alpha) * z.conj().powu(kp - beta) * (falling(k, alpha) * falling(kp, beta))
}

/// `∂^a ∂̄^b ω` at `z`, with `ω = e^{-z z̄}/π`.
///
/// Tracks the polynomial prefactor `P(z, w)` of `P e^{-zw}` with `w = z̄`
/// held independent.
pub fn weight_derivative(a: u32, b: u32, z: Complex64) -> Complex64 {
    let deg = (a + b) as usize + 1;
    // poly[i][j] is the coefficient of z^i w^j
    let mut poly = vec![vec![0.0f64; deg + 1]; deg + 1];
    poly[0][0] = 1.0;
    for _ in 0..a {
        // ∂_z (P e^{-zw}) = (∂_z P - w P) e^{-zw}
        let mut next = vec![vec![0.0; deg + 1]; deg + 1];
        for i in 0..=deg {
            for j in 0..=deg {
                let c = poly[i][j];
                if c == 0.0 {
                    continue;
                }
                if i > 0 {
                    next[i - 1][j] += c * i as f64;
                }
                if j < deg {
                    next[i][j + 1] -= c;
                }
            }
        }
        poly = next;
    }
    for _ in 0..b {
        let mut next = vec![vec![0.0; deg + 1]; deg + 1];
        for i in 0..=deg {
            for j in 0..=deg {
                let c = poly[i][j];
                if c == 0.0 {
                    continue;
                }
                if j > 0 {
                    next[i][j - 1] += c * j as f64;
                }
                if i < deg {
                    next[i + 1][j] -= c;
                }
            }
        }
        poly = next;
    }
    let w = z.conj();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, row) in poly.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if *c != 0.0 {
                acc += z.powu(i as u32) * w.powu(j as u32) * *c;
            }
        }
    }
    acc * (-z.norm_sqr()).exp() / PI
}

impl DeltaCombination {
    pub fn new(atoms: Vec<DeltaAtom>) -> Result<Self> {
        Self::with_convention(atoms, AtomConvention::Weighted)
    }

    pub fn with_convention(atoms: Vec<DeltaAtom>, convention: AtomConvention) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !(a.point.re.is_finite() && a.point.im.is_finite()) {
                return Err(FockError::InvalidSymbol("atom point is not finite".into()));
            }
            if atoms[..i].iter().any(|b| b.point == a.point) {
                return Err(FockError::InvalidSymbol(format!(
                    "duplicate atom point {}",
                    fmt_complex(a.point)
                )));
            }
        }
        Ok(Self { atoms, convention })
    }

    /// Pure deltas `Σ c_j δ_{z_j}`.
    pub fn deltas(points: &[(Complex64, Complex64)]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&(point, coeff)| DeltaAtom { point, ops: vec![DeltaOp { alpha: 0, beta: 0, coeff }] })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.ops.iter().all(|o| o.coeff.norm() <= COEFF_EPS))
    }

    /// Highest `α + β` among the ops.
    pub fn order(&self) -> u32 {
        self.atoms.iter().flat_map(|a| a.ops.iter()).map(|o| o.alpha + o.beta).max().unwrap_or(0)
    }

    /// `⟨𝐅, z^k z̄^{k'}⟩`.
    pub fn moment(&self, k: u32, kp: u32) -> Complex64 {
        let weighted = self.to_weighted();
        let mut acc = Complex64::new(0.0, 0.0);
        for atom in &weighted.atoms {
            for op in &atom.ops {
                let sign = if (op.alpha + op.beta) % 2 == 0 { 1.0 } else { -1.0 };
                acc += op.coeff * sign * monomial_derivative(k, kp, op.alpha, op.beta, atom.point);
            }
        }
        acc
    }

    /// Same distribution with atoms expressed for `𝐅 = ωF`.
    pub fn to_weighted(&self) -> DeltaCombination {
        if self.convention == AtomConvention::Weighted {
            return self.clone();
        }
        // ⟨F, ωφ⟩ = (-1)^{α+β} Σ C(α,i)C(β,j) ∂^{α-i}∂̄^{β-j}ω · ∂^i∂̄^jφ
        let atoms = self
            .atoms
            .iter()
            .map(|atom| {
                let mut ops: Vec<DeltaOp> = Vec::new();
                for op in &atom.ops {
                    for i in 0..=op.alpha {
                        for j in 0..=op.beta {
                            let sign = if (op.alpha + op.beta - i - j) % 2 == 0 { 1.0 } else { -1.0 };
                            let w = weight_derivative(op.alpha - i, op.beta - j, atom.point);
                            let coeff = op.coeff * w * (sign * binomial(op.alpha, i) * binomial(op.beta, j));
                            push_op(&mut ops, DeltaOp { alpha: i, beta: j, coeff });
                        }
                    }
                }
                DeltaAtom { point: atom.point, ops }
            })
            .collect();
        DeltaCombination { atoms, convention: AtomConvention::Weighted }
    }

    /// Merges repeated ops and drops atoms whose coefficients are all below `tol`.
    pub fn simplified(&self, tol: f64) -> DeltaCombination {
        let atoms = self
            .atoms
            .iter()
            .filter_map(|atom| {
                let mut ops = Vec::new();
                for op in &atom.ops {
                    push_op(&mut ops, *op);
                }
                ops.retain(|o| o.coeff.norm() > tol);
                (!ops.is_empty()).then_some(DeltaAtom { point: atom.point, ops })
            })
            .collect();
        DeltaCombination { atoms, convention: self.convention }
    }

    /// `p(z̄) 𝐅` with `p(z̄) = Σ γ_j z̄^j`.
    ///
    /// `p(z̄) ∂^α∂̄^β δ_{z₀} = Σ_j (-1)^j C(β,j) p^{(j)}(z̄₀) ∂^α∂̄^{β-j} δ_{z₀}`.
    pub fn times_antianalytic(&self, gamma: &[Complex64]) -> DeltaCombination {
        let weighted = self.to_weighted();
        let atoms = weighted
            .atoms
            .iter()
            .map(|atom| {
                let w = atom.point.conj();
                let mut ops = Vec::new();
                for op in &atom.ops {
                    for j in 0..=op.beta {
                        let dp = poly_derivative_at(gamma, j, w);
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        push_op(
                            &mut ops,
                            DeltaOp { alpha: op.alpha, beta: op.beta - j, coeff: op.coeff * dp * (sign * binomial(op.beta, j)) },
                        );
                    }
                }
                DeltaAtom { point: atom.point, ops }
            })
            .collect();
        DeltaCombination { atoms, convention: AtomConvention::Weighted }
    }

    /// The compactly supported `𝐆` with `∂̄𝐆 = 𝐅`, which exists as a delta
    /// combination exactly when every op with non-negligible coefficient has `β ≥ 1`.
    pub fn dbar_antiderivative(&self, tol: f64) -> Result<DeltaCombination> {
        let weighted = self.to_weighted().simplified(0.0);
        let mut atoms = Vec::new();
        for atom in &weighted.atoms {
            let mut ops = Vec::new();
            for op in &atom.ops {
                if op.beta == 0 {
                    if op.coeff.norm() > tol {
                        return Err(FockError::InvalidSymbol(format!(
                            "atom at {} has a ∂^{} δ term that no delta combination integrates",
                            fmt_complex(atom.point),
                            op.alpha
                        )));
                    }
                    continue;
                }
                ops.push(DeltaOp { beta: op.beta - 1, ..*op });
            }
            if !ops.is_empty() {
                atoms.push(DeltaAtom { point: atom.point, ops });
            }
        }
        Ok(DeltaCombination { atoms, convention: AtomConvention::Weighted })
    }

    /// `W_t 𝐅`: `W_t ∂^α∂̄^β δ_{z₀} = t^{-1-α-β} ∂^α∂̄^β δ_{z₀/t}`.
    pub fn scaled(&self, t: f64) -> Result<DeltaCombination> {
        check_scale(t)?;
        let weighted = self.to_weighted();
        let atoms = weighted
            .atoms
            .iter()
            .map(|atom| DeltaAtom {
                point: atom.point / t,
                ops: atom
                    .ops
                    .iter()
                    .map(|op| DeltaOp { coeff: op.coeff * t.powi(-1 - (op.alpha + op.beta) as i32), ..*op })
                    .collect(),
            })
            .collect();
        Ok(DeltaCombination { atoms, convention: AtomConvention::Weighted })
    }
}

fn push_op(ops: &mut Vec<DeltaOp>, op: DeltaOp) {
    if let Some(existing) = ops.iter_mut().find(|o| o.alpha == op.alpha && o.beta == op.beta) {
        existing.coeff += op.coeff;
    } else {
        ops.push(op);
    }
}

/// `p^{(j)}(w)` for `p(w) = Σ γ_i w^i`.
fn poly_derivative_at(gamma: &[Complex64], j: u32, w: Complex64) -> Complex64 {
    gamma
        .iter()
        .enumerate()
        .filter(|(i, _)| *i as u32 >= j)
        .map(|(i, g)| g * w.powu(i as u32 - j) * falling(i as u32, j))
        .sum()
}

/// Formats `a+bi` in a form the symbol grammar reads back.
pub fn fmt_complex(z: Complex64) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im == 0.0 {
        format!("{re}")
    } else if im > 0.0 {
        format!("{re}+{im}i")
    } else {
        format!("{re}{im}i")
    }
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`, `i`, `-i`; surrounding parentheses are allowed.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim();
    let s = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s).trim();
    let bad = || FockError::Parse(format!("cannot read complex number `{text}`"));
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        other => other.parse::<f64>().map_err(|_| bad()),
    };
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    match split {
        Some(p) => Ok(Complex64::new(real(&body[..p])?, imag(&body[p..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Reads the symbol mini-grammar.
///
/// Tokens are joined by `;`:
/// - `delta@<z>[*<c>]`: point mass at `z` with coefficient `c` (default 1)
/// - `ddelta[a,b]@<z>[*<c>]`: `c ∂^a ∂̄^b δ_z`
/// - `radial:gauss:<s>`: radial profile `e^{-s r²}`
/// - `polygauss:<a>,<b>,<s>,<c>`: term `c z^a z̄^b e^{-s|z|²}`
/// - `zero`
///
/// Delta atoms describe the weighted symbol `ωF`.
pub fn parse_symbol(text: &str) -> Result<Symbol> {
    let mut atoms: Vec<DeltaAtom> = Vec::new();
    let mut poly: Option<PolyGaussian> = None;
    let mut radial: Option<Symbol> = None;
    let mut saw_zero = false;
    let tokens: Vec<&str> = text.split(';').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(FockError::Parse("empty symbol".into()));
    }
    for token in tokens {
        if token == "zero" {
            saw_zero = true;
        } else if let Some(rest) = token.strip_prefix("radial:gauss:") {
            if radial.is_some() {
                return Err(FockError::Parse("only one radial profile is supported".into()));
            }
            let s = rest.trim().parse::<f64>().map_err(|_| FockError::Parse(format!("bad radial exponent `{rest}`")))?;
            radial = Some(Symbol::radial_gauss(s)?);
        } else if let Some(rest) = token.strip_prefix("polygauss:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(FockError::Parse(format!("polygauss expects a,b,s,coeff: `{token}`")));
            }
            let int = |t: &str| t.parse::<u32>().map_err(|_| FockError::Parse(format!("bad exponent `{t}`")));
            let s = parts[2].parse::<f64>().map_err(|_| FockError::Parse(format!("bad exponent `{}`", parts[2])))?;
            let term = PolyTerm { a: int(parts[0])?, b: int(parts[1])?, coeff: parse_complex(parts[3])? };
            match &mut poly {
                Some(p) if p.s == s => p.terms.push(term),
                Some(_) => return Err(FockError::Parse("polygauss terms must share s".into())),
                None => poly = Some(PolyGaussian::new(vec![term], s)?),
            }
        } else if token.starts_with("delta@") || token.starts_with("ddelta[") {
            let (alpha, beta, rest) = if let Some(rest) = token.strip_prefix("delta@") {
                (0, 0, rest)
            } else {
                let rest = &token["ddelta[".len()..];
                let close = rest.find(']').ok_or_else(|| FockError::Parse(format!("missing `]` in `{token}`")))?;
                let idx: Vec<&str> = rest[..close].split(',').map(str::trim).collect();
                if idx.len() != 2 {
                    return Err(FockError::Parse(format!("ddelta expects [a,b]: `{token}`")));
                }
                let int = |t: &str| t.parse::<u32>().map_err(|_| FockError::Parse(format!("bad order `{t}`")));
                let after = rest[close + 1..]
                    .strip_prefix('@')
                    .ok_or_else(|| FockError::Parse(format!("missing `@` in `{token}`")))?;
                (int(idx[0])?, int(idx[1])?, after)
            };
            let (point, coeff) = match rest.split_once('*') {
                Some((p, c)) => (parse_complex(p)?, parse_complex(c)?),
                None => (parse_complex(rest)?, Complex64::new(1.0, 0.0)),
            };
            let op = DeltaOp { alpha, beta, coeff };
            match atoms.iter_mut().find(|a| a.point == point) {
                Some(atom) => push_op(&mut atom.ops, op),
                None => atoms.push(DeltaAtom { point, ops: vec![op] }),
            }
        } else {
            return Err(FockError::Parse(format!("unrecognized symbol token `{token}`")));
        }
    }
    let kinds = [!atoms.is_empty(), poly.is_some(), radial.is_some()].iter().filter(|b| **b).count();
    match kinds {
        0 if saw_zero => Ok(Symbol::zero()),
        1 if !atoms.is_empty() => Ok(Symbol::Delta(DeltaCombination::new(atoms)?)),
        1 if poly.is_some() => Ok(Symbol::PolyGaussian(poly.expect("checked"))),
        1 => Ok(radial.expect("checked")),
        _ => Err(FockError::Parse("a symbol mixes incompatible kinds".into())),
    }
}

impl fmt::Display for DeltaCombination {
    /// Grammar form of the weighted atoms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let weighted = self.to_weighted();
        let mut tokens = Vec::new();
        for atom in &weighted.atoms {
            for op in &atom.ops {
                let head = if op.alpha == 0 && op.beta == 0 {
                    "delta".to_string()
                } else {
                    format!("ddelta[{},{}]", op.alpha, op.beta)
                };
                tokens.push(format!("{head}@{}*({})", fmt_complex(atom.point), fmt_complex(op.coeff)));
            }
        }
        if tokens.is_empty() {
            write!(f, "zero")
        } else {
            write!(f, "{}", tokens.join(";"))
        }
    }
}

impl fmt::Display for PolyGaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("polygauss:{},{},{},({})", t.a, t.b, self.s, fmt_complex(t.coeff)))
            .collect();
        write!(f, "{}", tokens.join(";"))
    }
}
