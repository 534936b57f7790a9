//! Reproducing kernel, monomial norms and Toeplitz sesquilinear forms.

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::quadrature::{default_radius, gauss_legendre_on, integrate, QuadRule};
use crate::symbol::Symbol;
use crate::weight::gaussian_weight;

/// `κ(z, w) = e^{z w̄}`.
pub fn kernel(z: Complex64, w: Complex64) -> Complex64 {
    (z * w.conj()).exp()
}

/// The reproducing kernel at `z` as a function: `κ_z(w) = e^{w z̄}`.
pub fn kernel_at(z: Complex64) -> impl Fn(Complex64) -> Complex64 + Sync + Copy {
    move |w| kernel(w, z)
}

const FACTORIAL_MAX: usize = 170;

/// `‖z^k‖² = k!` in the Fock norm.
pub fn monomial_norm_sq(k: usize) -> Result<f64> {
    if k > FACTORIAL_MAX {
        return Err(FockError::Overflow(k));
    }
    Ok((1..=k).map(|j| j as f64).product())
}

/// `t_F(u, v) = ∫ F u v̄ ω dλ` by quadrature.
pub fn toeplitz_form<U, V>(symbol: &Symbol, u: U, v: V, rule: &QuadRule) -> Result<Complex64>
where
    U: Fn(Complex64) -> Complex64 + Sync,
    V: Fn(Complex64) -> Complex64 + Sync,
{
    if let Symbol::Delta(_) = symbol {
        return Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "toeplitz_form" });
    }
    integrate(
        |w| symbol.eval(w).expect("function-like symbol") * u(w) * v(w).conj() * gaussian_weight(w),
        rule,
    )
}

/// Radial node count for the 1-D moment integrals of radial profiles.
const RADIAL_NODES: usize = 160;

/// `⟨ωF, z^k z̄^{k'}⟩` in closed form.
pub fn toeplitz_form_exact(symbol: &Symbol, k: usize, kp: usize) -> Result<Complex64> {
    match symbol {
        Symbol::Delta(d) => Ok(d.moment(k as u32, kp as u32)),
        Symbol::PolyGaussian(p) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &p.terms {
                if k + t.a as usize != kp + t.b as usize {
                    continue;
                }
                let m = k + t.a as usize;
                acc += t.coeff * monomial_norm_sq(m)? / (1.0 + p.s).powi(m as i32 + 1);
            }
            Ok(acc)
        }
        Symbol::Radial { profile, .. } => {
            if k != kp {
                return Ok(Complex64::new(0.0, 0.0));
            }
            // 2 ∫₀^∞ F(r) r^{2k+1} e^{-r²} dr
            let radius = default_radius(2 * k);
            let (rs, ws) = gauss_legendre_on(RADIAL_NODES, 0.0, radius);
            let v: f64 = rs
                .iter()
                .zip(&ws)
                .map(|(r, w)| w * profile(*r) * r.powi(2 * k as i32 + 1) * (-r * r).exp())
                .sum();
            Ok(Complex64::new(2.0 * v, 0.0))
        }
        Symbol::Smooth { .. } => {
            Err(FockError::UnsupportedSymbol { kind: symbol.kind(), operation: "toeplitz_form_exact" })
        }
    }
}
