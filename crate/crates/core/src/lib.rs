//! Numerical tools for Toeplitz operators on the Fock space.
//!
//! The crate covers the Gaussian weight and decay classes ([`weight`]),
//! polar quadrature ([`quadrature`]), the reproducing kernel and Toeplitz
//! forms ([`fock`]), moment and kernel matrices with their numeric rank
//! ([`moments`], [`evaluator`]), a Cauchy-transform solver for `∂̄u = h`
//! ([`dbar`]), and the column calculus that reduces a finite-rank moment
//! matrix to the delta combination behind it ([`reduce`]).

pub mod dbar;
pub mod dd;
pub mod error;
pub mod evaluator;
pub mod fock;
pub mod grid;
pub mod moments;
pub mod quadrature;
pub mod reduce;
pub mod selfcheck;
pub mod symbol;
pub mod weight;

pub use dbar::{cauchy_transform, mollify, orthogonality_residuals, solve_dbar_field, CauchyConfig, DbarField, GaussMonomial, Mollifier};
pub use error::{FockError, Result};
pub use evaluator::{EvaluatorConfig, EvaluatorRegistry, ExactEvaluator, ExtendedEvaluator, FormEvaluator, QuadratureEvaluator};
pub use fock::{kernel, kernel_at, monomial_norm_sq, toeplitz_form, toeplitz_form_exact};
pub use grid::Grid;
pub use moments::{numeric_rank, KernelMatrix, MomentMatrix, Precision, Provenance, RankCertificate};
pub use reduce::{annihilating_polynomial, dbar_antiderivative_moments, moment_matrix_scale_check, multiply_antianalytic_moments, recover_deltas, scale_symbol, AnnihilatingPolynomial, RecoveryOptions, RecoveryResult};
pub use quadrature::{build_polar_rule, integrate, QuadRule};
pub use symbol::{parse_symbol, DeltaAtom, DeltaCombination, DeltaOp, PolyGaussian, PolyTerm, Symbol};
pub use weight::{class_seminorm, decay_fit, gaussian_weight, DecayFit, GrowthClass};

pub use num_complex::Complex64;
