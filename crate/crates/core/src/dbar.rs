//! Solving `∂̄u = h` through the Cauchy transform, with orthogonality checks,
//! mollification and Gaussian-decay certification of the solution.
//!
//! The Cauchy integral `u(z) = -(1/π) ∫ h(ζ)/(ζ - z) dλ(ζ)` is evaluated in
//! polar coordinates centred at `z`: with `ζ = z + r e^{iθ}` the Jacobian `r`
//! cancels the kernel singularity and the integrand
//! `h(z + r e^{iθ}) e^{-iθ}` is smooth on `[0, R] × [0, 2π)`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{FockError, Result};
use crate::grid::{dbar_fd, Grid};
use crate::quadrature::{build_polar_rule, gauss_legendre_on, integrate, QuadRule};
use crate::weight::{decay_fit, DecayFit};

/// Raw pairings `⟨h, z^k⟩ = ∫ h z^k dλ` for `k = 0..=max_k`.
pub fn orthogonality_residuals<H>(h: H, max_k: usize, rule: &QuadRule) -> Result<Vec<Complex64>>
where
    H: Fn(Complex64) -> Complex64 + Sync,
{
    if max_k > 20 {
        return Err(FockError::BadParams(format!("orthogonality order {max_k} exceeds 20")));
    }
    (0..=max_k).map(|k| integrate(|z| h(z) * z.powu(k as u32), rule)).collect()
}

/// Scale-aware pass threshold `1e-9 (1 + max_k ⟨|h|, |z|^k⟩)`.
pub fn orthogonality_threshold<H>(h: H, max_k: usize, rule: &QuadRule) -> Result<f64>
where
    H: Fn(Complex64) -> Complex64 + Sync,
{
    let mut scale = 0.0_f64;
    for k in 0..=max_k {
        let v = integrate(|z| Complex64::new(h(z).norm() * z.norm().powi(k as i32), 0.0), rule)?;
        scale = scale.max(v.re);
    }
    Ok(1e-9 * (1.0 + scale))
}

/// Recentred polar rule for one Cauchy integral.
struct PolarAround {
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    dirs: Vec<Complex64>,
}

impl PolarAround {
    fn new(radius: f64, n_r: usize, n_t: usize) -> Result<Self> {
        // reuse the validation of the disk rule
        build_polar_rule(radius, n_r, n_t).map(|_| ())?;
        let (radii, radial_weights) = gauss_legendre_on(n_r, 0.0, radius);
        let dirs = (0..n_t).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n_t as f64)).collect();
        Ok(Self { radii, radial_weights, dirs })
    }

    /// The same rule stretched to another radius.
    fn rescaled(&self, from: f64, to: f64) -> Self {
        let s = to / from;
        Self {
            radii: self.radii.iter().map(|r| r * s).collect(),
            radial_weights: self.radial_weights.iter().map(|w| w * s).collect(),
            dirs: self.dirs.clone(),
        }
    }

    /// `-(1/π) ∫₀^R ∫₀^{2π} g(ζ) h(ζ) e^{-iθ} dθ dr` with `ζ = z + r e^{iθ}`,
    /// together with `max |h|` over the nodes.
    fn integrate<H, G>(&self, h: &H, weight: G, z: Complex64) -> Result<(Complex64, f64)>
    where
        H: Fn(Complex64) -> Complex64,
        G: Fn(Complex64) -> f64,
    {
        let dtheta = 2.0 * PI / self.dirs.len() as f64;
        let mut total = Complex64::new(0.0, 0.0);
        let mut peak = 0.0_f64;
        for (r, wr) in self.radii.iter().zip(&self.radial_weights) {
            let mut ring = Complex64::new(0.0, 0.0);
            for d in &self.dirs {
                let zeta = z + d * r;
                let v = h(zeta);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(FockError::NonFiniteValue { re: zeta.re, im: zeta.im });
                }
                peak = peak.max(v.norm());
                ring += v * weight(zeta) * d.conj();
            }
            total += ring * (wr * dtheta);
        }
        Ok((-total / PI, peak))
    }

    fn check_tail<H>(&self, h: &H, z: Complex64, radius: f64, peak: f64) -> Result<()>
    where
        H: Fn(Complex64) -> Complex64,
    {
        if peak == 0.0 {
            return Ok(());
        }
        let tail = self.dirs.iter().map(|d| h(z + d * radius).norm()).fold(0.0, f64::max);
        if tail > 1e-12 * peak {
            return Err(FockError::TailNotNegligible { tail, peak });
        }
        Ok(())
    }
}

/// `u(z) = -(1/π) ∫_{|ζ-z|<R} h(ζ)/(ζ - z) dλ(ζ)`.
pub fn cauchy_transform<H>(h: H, z: Complex64, radius: f64, n_r: usize, n_t: usize) -> Result<Complex64>
where
    H: Fn(Complex64) -> Complex64,
{
    let polar = PolarAround::new(radius, n_r, n_t)?;
    let (u, peak) = polar.integrate(&h, |_| 1.0, z)?;
    polar.check_tail(&h, z, radius, peak)?;
    Ok(u)
}

/// Quadrature settings for Cauchy integrals over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyConfig {
    /// Radius beyond which `h` is negligible; each point integrates over
    /// `|ζ - z| < |z| + support_radius`.
    pub support_radius: f64,
    pub n_r: usize,
    pub n_t: usize,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self { support_radius: 9.0, n_r: 96, n_t: 96 }
    }
}

impl CauchyConfig {
    pub fn radius_for(&self, z: Complex64) -> f64 {
        z.norm() + self.support_radius
    }
}

/// The two halves of the Cauchy integral split by the smooth cutoff
/// `θ_γ(|ζ|)` at `γ(z) = |z|/√e`: `far` carries `θ_γ`, `near` carries `1 - θ_γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitIntegrals {
    pub far: Complex64,
    pub near: Complex64,
}

/// Smooth step: 0 for `t ≤ γ`, 1 for `t ≥ γ + 1`.
pub fn cutoff(t: f64, gamma: f64) -> f64 {
    let x = t - gamma;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    f(x) / (f(x) + f(1.0 - x))
}

/// Diagnostic split of `u(z)` into far and near parts; `far + near = u(z)`.
pub fn cauchy_split<H>(h: H, z: Complex64, cfg: &CauchyConfig) -> Result<SplitIntegrals>
where
    H: Fn(Complex64) -> Complex64,
{
    let radius = cfg.radius_for(z);
    let polar = PolarAround::new(radius, cfg.n_r, cfg.n_t)?;
    let gamma = z.norm() / std::f64::consts::E.sqrt();
    let (far, peak) = polar.integrate(&h, |zeta| cutoff(zeta.norm(), gamma), z)?;
    polar.check_tail(&h, z, radius, peak)?;
    let (near, _) = polar.integrate(&h, |zeta| 1.0 - cutoff(zeta.norm(), gamma), z)?;
    Ok(SplitIntegrals { far, near })
}

/// Grid samples of a `∂̄`-solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct DbarField {
    pub grid: Grid,
    pub u: Vec<Complex64>,
    /// `max |∂̄_FD u - h|` over points at least three cells from the edge.
    pub residual: f64,
    /// Decay of `|u|` on the annulus `(0.6, 0.95) · extent`; `None` when `u`
    /// vanishes there.
    pub decay: Option<DecayFit>,
}

/// Spacing above which the finite-difference residual is not meaningful.
pub const MAX_RESIDUAL_SPACING: f64 = 0.2;

pub fn solve_dbar_field<H>(h: H, grid: &Grid, cfg: &CauchyConfig) -> Result<DbarField>
where
    H: Fn(Complex64) -> Complex64 + Sync,
{
    if grid.extent < 3.0 {
        return Err(FockError::BadParams(format!("grid extent {} is below 3", grid.extent)));
    }
    if grid.spacing > MAX_RESIDUAL_SPACING {
        return Err(FockError::BadParams(format!(
            "grid spacing {} exceeds {MAX_RESIDUAL_SPACING}",
            grid.spacing
        )));
    }
    let unit = PolarAround::new(1.0, cfg.n_r, cfg.n_t)?;
    let u: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point(idx);
            let radius = cfg.radius_for(z);
            let polar = unit.rescaled(1.0, radius);
            let (u, peak) = polar.integrate(&h, |_| 1.0, z)?;
            polar.check_tail(&h, z, radius, peak)?;
            Ok(u)
        })
        .collect::<Result<_>>()?;

    let mut residual = 0.0_f64;
    for idx in 0..grid.len() {
        if let Some(d) = dbar_fd(grid, &u, idx) {
            residual = residual.max((d - h(grid.point(idx))).norm());
        }
    }

    let samples: Vec<(Complex64, f64)> = grid.points().zip(&u).map(|(z, v)| (z, v.norm())).collect();
    let annulus = (0.6 * grid.extent, 0.95 * grid.extent);
    let decay = match decay_fit(&samples, annulus) {
        Ok(fit) => Some(fit),
        Err(FockError::InsufficientSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(DbarField { grid: *grid, u, residual, decay })
}

/// Writes `re_z,im_z,re_u,im_u` rows in grid order with 17 significant digits.
pub fn write_field_csv<W: Write>(mut out: W, grid: &Grid, values: &[Complex64]) -> std::io::Result<()> {
    writeln!(out, "re_z,im_z,re_u,im_u")?;
    for (z, u) in grid.points().zip(values) {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", z.re, z.im, u.re, u.im)?;
    }
    Ok(())
}

/// Reads field CSV back into `(z, u)` pairs.
pub fn read_field_csv<R: BufRead>(input: R) -> Result<Vec<(Complex64, Complex64)>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| FockError::Parse("empty field file".into()))?
        .map_err(|e| FockError::Parse(e.to_string()))?;
    if header.trim() != "re_z,im_z,re_u,im_u" {
        return Err(FockError::Parse(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| FockError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FockError::Parse(format!("line {}: {e}", n + 2)))?;
        if vals.len() != 4 {
            return Err(FockError::Parse(format!("line {}: expected 4 fields", n + 2)));
        }
        rows.push((Complex64::new(vals[0], vals[1]), Complex64::new(vals[2], vals[3])));
    }
    Ok(rows)
}

/// Radial bump `ρ(w) = c·exp(-1/(1 - |w|²))` on the unit disk, normalized to unit mass.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub delta: f64,
    norm_const: f64,
    rule: QuadRule,
}

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

impl Mollifier {
    pub const N_R: usize = 48;
    pub const N_T: usize = 48;

    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(FockError::BadParams(format!("mollifier scale must be in (0, 1], got {delta}")));
        }
        let rule = build_polar_rule(1.0, Self::N_R, Self::N_T)?;
        // unit mass under the same radial nodes: 2π Σ w_r r ρ(r) = 1
        let radial: f64 =
            rule.radial_nodes.iter().zip(&rule.radial_weights).map(|(r, w)| w * r * bump(*r)).sum();
        Ok(Self { delta, norm_const: 1.0 / (2.0 * PI * radial), rule })
    }

    /// `ρ(w)`, unscaled.
    pub fn density(&self, w: Complex64) -> f64 {
        self.norm_const * bump(w.norm())
    }

    /// `(f * ρ_δ)(z) = ∫ f(z - δw) ρ(w) dλ(w)`.
    pub fn apply<F>(&self, f: &F, z: Complex64) -> Complex64
    where
        F: Fn(Complex64) -> Complex64,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, a) in &self.rule.nodes {
            acc += f(z - w * self.delta) * (a * self.density(*w));
        }
        acc
    }

    /// Discrete mass of the rule.
    pub fn mass(&self) -> f64 {
        self.rule.nodes.iter().map(|(w, a)| a * self.density(*w)).sum()
    }
}

/// `f * ρ_δ` sampled on a grid.
pub fn mollify<F>(f: F, delta: f64, grid: &Grid) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let m = Mollifier::new(delta)?;
    Ok((0..grid.len()).into_par_iter().map(|idx| m.apply(&f, grid.point(idx))).collect())
}

/// `h = ∂̄(z̄^m z^n e^{-a|z|²})` and its antiderivative `u = z̄^m z^n e^{-a|z|²}`.
///
/// `∂̄u = (m z̄^{m-1} z^n - a z̄^m z^{n+1}) e^{-a|z|²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMonomial {
    pub m: u32,
    pub n: u32,
    pub a: f64,
}

impl GaussMonomial {
    pub fn antiderivative(&self, z: Complex64) -> Complex64 {
        z.conj().powu(self.m) * z.powu(self.n) * (-self.a * z.norm_sqr()).exp()
    }

    pub fn rhs(&self, z: Complex64) -> Complex64 {
        let g = (-self.a * z.norm_sqr()).exp();
        let zb = z.conj();
        let lead = if self.m > 0 { zb.powu(self.m - 1) * z.powu(self.n) * self.m as f64 } else { Complex64::new(0.0, 0.0) };
        (lead - zb.powu(self.m) * z.powu(self.n + 1) * self.a) * g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn h_gauss(z: Complex64) -> Complex64 {
        -z * (-z.norm_sqr()).exp()
    }

    #[test]
    fn orthogonality_examples() {
        let rule = build_polar_rule(8.0, 64, 64).unwrap();
        let res = orthogonality_residuals(h_gauss, 10, &rule).unwrap();
        assert!(res.iter().all(|r| r.norm() < 1e-12));

        let res = orthogonality_residuals(|z| c((-z.norm_sqr()).exp(), 0.0), 3, &rule).unwrap();
        assert!((res[0] - PI).norm() < 1e-12);
        assert!(res[1].norm() < 1e-12);

        let res = orthogonality_residuals(|_| c(0.0, 0.0), 10, &rule).unwrap();
        assert!(res.iter().all(|r| *r == c(0.0, 0.0)));
        assert!(orthogonality_residuals(h_gauss, 21, &rule).is_err());
    }

    #[test]
    fn cauchy_examples() {
        let u0 = cauchy_transform(h_gauss, c(0.0, 0.0), 9.0, 96, 96).unwrap();
        assert!((u0 - 1.0).norm() < 1e-8);
        let z = c(1.0, 1.0);
        let u = cauchy_transform(h_gauss, z, z.norm() + 9.0, 96, 96).unwrap();
        assert!((u - (-2.0f64).exp()).norm() < 1e-7, "{u}");
        assert_eq!(cauchy_transform(|_| c(0.0, 0.0), z, 5.0, 16, 16).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn cauchy_flags_heavy_tails() {
        let err = cauchy_transform(|z| c((-0.01 * z.norm_sqr()).exp(), 0.0), c(0.0, 0.0), 5.0, 32, 32);
        assert!(matches!(err, Err(FockError::TailNotNegligible { .. })));
    }

    #[test]
    fn cauchy_is_linear() {
        let h1 = |z: Complex64| GaussMonomial { m: 1, n: 0, a: 1.0 }.rhs(z);
        let h2 = |z: Complex64| GaussMonomial { m: 0, n: 2, a: 0.5 }.rhs(z);
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let z = c(0.7, -0.4);
        let r = z.norm() + 9.0;
        let lhs = cauchy_transform(|w| h1(w) * a + h2(w) * b, z, r, 96, 96).unwrap();
        let rhs = cauchy_transform(h1, z, r, 96, 96).unwrap() * a + cauchy_transform(h2, z, r, 96, 96).unwrap() * b;
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn split_halves_add_up() {
        let z = c(2.0, -1.0);
        let cfg = CauchyConfig::default();
        let s = cauchy_split(h_gauss, z, &cfg).unwrap();
        let u = cauchy_transform(h_gauss, z, cfg.radius_for(z), cfg.n_r, cfg.n_t).unwrap();
        assert!((s.far + s.near - u).norm() < 1e-13);
        assert!(s.far.norm() > 0.0 && s.near.norm() > 0.0);
        assert_eq!(cutoff(0.5, 1.0), 0.0);
        assert_eq!(cutoff(2.5, 1.0), 1.0);
        assert!((cutoff(1.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn field_examples() {
        let grid = Grid::new(4.0, 0.1).unwrap();
        let cfg = CauchyConfig::default();
        let field = solve_dbar_field(h_gauss, &grid, &cfg).unwrap();
        assert!(field.residual < 1e-5, "residual {}", field.residual);
        let decay = field.decay.unwrap();
        assert!((decay.q_hat - 1.0).abs() < 0.01, "q_hat {}", decay.q_hat);

        let zero = solve_dbar_field(|_| c(0.0, 0.0), &Grid::new(3.0, 0.2).unwrap(), &cfg).unwrap();
        assert!(zero.u.iter().all(|v| *v == c(0.0, 0.0)));
        assert_eq!(zero.residual, 0.0);
        assert!(zero.decay.is_none());

        assert!(solve_dbar_field(h_gauss, &Grid::new(2.0, 0.1).unwrap(), &cfg).is_err());
        assert!(solve_dbar_field(h_gauss, &Grid::new(3.0, 0.25).unwrap(), &cfg).is_err());
    }

    #[test]
    fn field_recovers_conjugate_gaussian() {
        // ∂̄(z̄ e^{-|z|²}) = (1 - |z|²) e^{-|z|²}
        let fam = GaussMonomial { m: 1, n: 0, a: 1.0 };
        let h = |z: Complex64| c((1.0 - z.norm_sqr()) * (-z.norm_sqr()).exp(), 0.0);
        let z = c(0.3, 0.8);
        assert!((h(z) - fam.rhs(z)).norm() < 1e-15);
        let grid = Grid::new(3.0, 0.1).unwrap();
        let field = solve_dbar_field(h, &grid, &CauchyConfig::default()).unwrap();
        let err = grid.points().zip(&field.u).map(|(z, u)| (u - fam.antiderivative(z)).norm()).fold(0.0, f64::max);
        assert!(err < 1e-5, "sup error {err}");
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let grid = Grid::new(1.0, 0.5).unwrap();
        let vals = grid.sample(|z| z * c(0.1, 1.0 / 3.0) + 1e-300);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &grid, &vals).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("re_z,im_z,re_u,im_u\n"));
        let rows = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), grid.len());
        for ((z, u), (z0, u0)) in rows.iter().zip(grid.points().zip(&vals)) {
            assert_eq!(*z, z0);
            assert_eq!(u, u0);
        }
        assert!(read_field_csv("x,y\n".as_bytes()).is_err());
    }

    #[test]
    fn mollifier_basics() {
        let m = Mollifier::new(0.2).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-10);
        assert_eq!(m.density(c(1.0, 0.0)), 0.0);
        assert!(m.density(c(0.0, 0.0)) > 0.0);
        assert!(Mollifier::new(0.0).is_err());
        assert!(Mollifier::new(1.5).is_err());

        let grid = Grid::new(2.0, 0.5).unwrap();
        let vals = mollify(|_| c(3.0, -1.0), 0.3, &grid).unwrap();
        assert!(vals.iter().all(|v| (v - c(3.0, -1.0)).norm() < 1e-10));
        let vals = mollify(|z| c(z.re, 0.0), 0.3, &grid).unwrap();
        for (z, v) in grid.points().zip(&vals) {
            assert!((v - c(z.re, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn mollifier_rate_is_linear_for_lipschitz_data() {
        // |z| has a kink at the origin, so the sup error scales like δ
        let grid = Grid::new(1.0, 0.05).unwrap();
        let f = |z: Complex64| c(z.norm(), 0.0);
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&d| {
                let v = mollify(f, d, &grid).unwrap();
                grid.points().zip(&v).map(|(z, v)| (v - f(z)).norm()).fold(0.0, f64::max)
            })
            .collect();
        let ratios: Vec<f64> = errs.iter().zip([0.2, 0.1, 0.05]).map(|(e, d)| e / d).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(hi / lo < 1.1, "{ratios:?}");
    }

    #[test]
    fn gauss_monomial_rhs_matches_finite_differences() {
        let fam = GaussMonomial { m: 2, n: 1, a: 0.5 };
        let z = c(0.4, -0.9);
        let e = 1e-5;
        let ux = (fam.antiderivative(z + e) - fam.antiderivative(z - e)) / (2.0 * e);
        let uy = (fam.antiderivative(z + c(0.0, e)) - fam.antiderivative(z - c(0.0, e))) / (2.0 * e);
        let dbar = (ux + c(0.0, 1.0) * uy) * 0.5;
        assert!((dbar - fam.rhs(z)).norm() < 1e-8);
    }
}
