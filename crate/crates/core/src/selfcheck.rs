//! Named invariant checks across all modules, cheap enough to run on demand.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dbar::{cauchy_transform, orthogonality_residuals, read_field_csv, write_field_csv, Mollifier};
use crate::evaluator::{EvaluatorRegistry, ExactEvaluator, FormEvaluator};
use crate::fock::{kernel_at, toeplitz_form};
use crate::grid::Grid;
use crate::moments::{MomentMatrix, DEFAULT_RANK_TOL};
use crate::quadrature::{build_polar_rule, integrate};
use crate::reduce::{
    dbar_antiderivative_moments, moment_matrix_scale_check, multiply_antianalytic_moments, recover_deltas,
    RecoveryOptions,
};
use crate::symbol::{parse_symbol, Symbol};
use crate::weight::GrowthClass;

/// `Ok` carries a short note, `Err` the reason for failure.
pub type CheckFn = fn() -> std::result::Result<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("quadrature.gaussian_mass", gaussian_mass),
        ("fock.reproducing_kernel", reproducing_kernel),
        ("moments.finite_rank", finite_rank),
        ("moments.radial_full_rank", radial_full_rank),
        ("moments.json_round_trip", json_round_trip),
        ("evaluator.registry", registry),
        ("reduce.scaling_rank", scaling_rank),
        ("reduce.calculus_rank", calculus_rank),
        ("reduce.recovery", recovery),
        ("dbar.orthogonality", orthogonality),
        ("dbar.cauchy_oracle", cauchy_oracle),
        ("dbar.mollifier_mass", mollifier_mass),
        ("dbar.csv_round_trip", csv_round_trip),
    ]
}

pub fn run_all() -> Vec<CheckOutcome> {
    checks()
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckOutcome { name, passed: true, detail },
            Err(detail) => CheckOutcome { name, passed: false, detail },
        })
        .collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gaussian_mass() -> std::result::Result<String, String> {
    let rule = build_polar_rule(8.0, 64, 64).map_err(|e| e.to_string())?;
    let v = integrate(|z| c((-z.norm_sqr()).exp(), 0.0), &rule).map_err(|e| e.to_string())?;
    let err = (v.re - PI).abs();
    ensure(err < 1e-12, format!("∫e^(-|z|²) off by {err:.2e}"))?;
    Ok(format!("error {err:.2e}"))
}

fn reproducing_kernel() -> std::result::Result<String, String> {
    let rule = build_polar_rule(10.0, 96, 96).map_err(|e| e.to_string())?;
    let one = Symbol::smooth(|_| c(1.0, 0.0), GrowthClass::new(0.5, 0).map_err(|e| e.to_string())?);
    let p = |w: Complex64| w.powu(3) * c(0.5, -1.0) + w * 2.0 - c(0.0, 1.0);
    let mut worst = 0.0_f64;
    for z in [c(0.0, 0.0), c(1.2, -0.4), c(-0.9, 1.5)] {
        let v = toeplitz_form(&one, p, kernel_at(z), &rule).map_err(|e| e.to_string())?;
        worst = worst.max((v - p(z)).norm());
    }
    ensure(worst < 1e-8, format!("(p, κ_z) - p(z) = {worst:.2e}"))?;
    Ok(format!("max error {worst:.2e}"))
}

fn rank_of(spec: &str, n: usize) -> std::result::Result<usize, String> {
    let s = parse_symbol(spec).map_err(|e| e.to_string())?;
    Ok(ExactEvaluator.moment_matrix(&s, n).map_err(|e| e.to_string())?.rank(DEFAULT_RANK_TOL).rank)
}

fn finite_rank() -> std::result::Result<String, String> {
    let r = rank_of("delta@1;delta@-0.5i*2;delta@0.7+0.7i*0.5", 12)?;
    ensure(r == 3, format!("three atoms gave rank {r}"))?;
    Ok("rank 3".into())
}

fn radial_full_rank() -> std::result::Result<String, String> {
    for n in 1..=12 {
        let r = ExactEvaluator
            .moment_matrix(&Symbol::radial_gauss(1.0).map_err(|e| e.to_string())?, n)
            .map_err(|e| e.to_string())?
            .rank(DEFAULT_RANK_TOL)
            .rank;
        ensure(r == n, format!("N = {n} gave rank {r}"))?;
    }
    Ok("full rank for N ≤ 12".into())
}

fn json_round_trip() -> std::result::Result<String, String> {
    let s = parse_symbol("delta@0.3-1.1i*0.7;ddelta[1,0]@0.5").map_err(|e| e.to_string())?;
    let m = ExactEvaluator.moment_matrix(&s, 8).map_err(|e| e.to_string())?;
    let back = MomentMatrix::from_json(&m.to_json()).map_err(|e| e.to_string())?;
    ensure(back.entries == m.entries, "entries changed")?;
    Ok("bit-exact".into())
}

fn registry() -> std::result::Result<String, String> {
    let reg = EvaluatorRegistry::standard();
    let s = parse_symbol("delta@0.5*2").map_err(|e| e.to_string())?;
    let cfg = Default::default();
    let a = reg.create("exact", &cfg).map_err(|e| e.to_string())?.moment_matrix(&s, 6).map_err(|e| e.to_string())?;
    let b = reg.create("exact-dd", &cfg).map_err(|e| e.to_string())?.moment_matrix(&s, 6).map_err(|e| e.to_string())?;
    let diff = (&a.entries - &b.entries).norm();
    ensure(diff < 1e-13, format!("evaluators disagree by {diff:.2e}"))?;
    Ok(reg.names().join(","))
}

fn scaling_rank() -> std::result::Result<String, String> {
    for spec in ["delta@1;delta@-1", "ddelta[0,1]@0", "delta@0.5i*2;ddelta[1,0]@-0.3"] {
        let s = parse_symbol(spec).map_err(|e| e.to_string())?;
        for t in [0.5, 1.5, 2.0] {
            let (a, b) = moment_matrix_scale_check(&s, t, 10).map_err(|e| e.to_string())?;
            ensure(a == b, format!("{spec} at t = {t}: rank {a} → {b}"))?;
        }
    }
    Ok("ranks preserved".into())
}

fn calculus_rank() -> std::result::Result<String, String> {
    let s = parse_symbol("delta@1;delta@-0.5+0.5i*2;ddelta[0,1]@0.2").map_err(|e| e.to_string())?;
    let m = ExactEvaluator.moment_matrix(&s, 12).map_err(|e| e.to_string())?;
    let r0 = m.rank(DEFAULT_RANK_TOL).rank;
    let g = multiply_antianalytic_moments(&m, &[c(0.3, -0.2), c(1.0, 0.0)]).map_err(|e| e.to_string())?;
    let r1 = g.rank(DEFAULT_RANK_TOL).rank;
    let h = dbar_antiderivative_moments(&m).map_err(|e| e.to_string())?;
    let r2 = h.rank(DEFAULT_RANK_TOL).rank;
    ensure(r1 <= r0 && r2 <= r0, format!("rank {r0} grew to {r1} / {r2}"))?;
    Ok(format!("{r0} → {r1}, {r2}"))
}

fn recovery() -> std::result::Result<String, String> {
    let s = parse_symbol("delta@1*0.5;delta@-i*2").map_err(|e| e.to_string())?;
    let m = ExactEvaluator.moment_matrix(&s, 10).map_err(|e| e.to_string())?;
    let r = recover_deltas(&m, RecoveryOptions::default()).map_err(|e| e.to_string())?;
    let coeffs = r.coeffs();
    for (p, want) in [(c(1.0, 0.0), c(0.5, 0.0)), (c(0.0, -1.0), c(2.0, 0.0))] {
        let i = r.points.iter().position(|q| (q - p).norm() < 1e-8).ok_or(format!("missed point {p}"))?;
        ensure((coeffs[i] - want).norm() < 1e-8, format!("coefficient at {p} is {}", coeffs[i]))?;
    }
    Ok(format!("residual {:.2e}", r.residual))
}

fn orthogonality() -> std::result::Result<String, String> {
    let rule = build_polar_rule(8.0, 64, 64).map_err(|e| e.to_string())?;
    let res = orthogonality_residuals(|z| -z * (-z.norm_sqr()).exp(), 10, &rule).map_err(|e| e.to_string())?;
    let worst = res.iter().map(|r| r.norm()).fold(0.0, f64::max);
    ensure(worst < 1e-12, format!("residual {worst:.2e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn cauchy_oracle() -> std::result::Result<String, String> {
    let z = c(1.0, 1.0);
    let u = cauchy_transform(|w| -w * (-w.norm_sqr()).exp(), z, z.norm() + 9.0, 96, 96).map_err(|e| e.to_string())?;
    let err = (u - (-2.0f64).exp()).norm();
    ensure(err < 1e-7, format!("u(1+i) off by {err:.2e}"))?;
    Ok(format!("error {err:.2e}"))
}

fn mollifier_mass() -> std::result::Result<String, String> {
    let m = Mollifier::new(0.1).map_err(|e| e.to_string())?;
    let err = (m.mass() - 1.0).abs();
    ensure(err < 1e-10, format!("mass off by {err:.2e}"))?;
    Ok(format!("mass error {err:.2e}"))
}

fn csv_round_trip() -> std::result::Result<String, String> {
    let grid = Grid::new(1.0, 0.25).map_err(|e| e.to_string())?;
    let vals = grid.sample(|z| (z * c(0.3, 1.0 / 7.0)).exp());
    let mut buf = Vec::new();
    write_field_csv(&mut buf, &grid, &vals).map_err(|e| e.to_string())?;
    let rows = read_field_csv(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure(rows.iter().map(|r| r.1).eq(vals.iter().copied()), "values changed")?;
    Ok("bit-exact".into())
}
