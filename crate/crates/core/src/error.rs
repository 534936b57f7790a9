use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("integrand produced a non-finite value at z = {re}{im:+}i")]
    NonFiniteValue { re: f64, im: f64 },

    #[error("decay fit needs at least {needed} usable samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("decay fit is degenerate: all samples share the same |z|^2")]
    DegenerateFit,

    #[error("grid spacing {spacing} is too coarse for derivatives (max 0.25)")]
    GridTooCoarse { spacing: f64 },

    #[error("factorial overflow: k = {0} exceeds 170")]
    Overflow(usize),

    #[error("symbol kind `{kind}` is not supported by {operation}")]
    UnsupportedSymbol { kind: &'static str, operation: &'static str },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("quadrature under-resolved: entry ({row}, {col}) moved by {change:.3e} relative when nodes doubled")]
    QuadratureUnderresolved { row: usize, col: usize, change: f64 },

    #[error("truncation N = {n} exceeds the cap {cap} for {precision} precision")]
    TruncationTooLarge { n: usize, cap: usize, precision: &'static str },

    #[error("integrand tail not negligible: |h| = {tail:.3e} at the truncation radius vs max {peak:.3e}")]
    TailNotNegligible { tail: f64, peak: f64 },

    #[error("matrix has {have} columns, operation needs at least {need}")]
    InsufficientColumns { have: usize, need: usize },

    #[error("no annihilating polynomial: the column block has full rank")]
    NoAnnihilator,

    #[error("reduction did not terminate after {steps} steps (working norm {norm:.3e})")]
    DidNotTerminate { steps: usize, norm: f64 },

    #[error("unknown evaluator `{0}`")]
    UnknownEvaluator(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FockError>;
