//! The Cauchy solver inverts `∂̄` on every `z̄^m z^n e^{-a|z|²}` with `m, n ≤ 2`.

use focklab::dbar::{solve_dbar_field, CauchyConfig, GaussMonomial};
use focklab::Grid;

#[test]
fn dbar_inverse_on_gauss_monomials() {
    let grid = Grid::new(3.0, 0.1).unwrap();
    let cfg = CauchyConfig::default();
    for a in [0.5, 1.0] {
        for m in 0..=2 {
            for n in 0..=2 {
                let fam = GaussMonomial { m, n, a };
                let field = solve_dbar_field(|z| fam.rhs(z), &grid, &cfg).unwrap();
                assert!(field.residual < 1e-4, "m={m} n={n} a={a}: residual {}", field.residual);
                let err = grid
                    .points()
                    .zip(&field.u)
                    .map(|(z, u)| (u - fam.antiderivative(z)).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-4, "m={m} n={n} a={a}: sup error {err}");
            }
        }
    }
}
