//! `focklab` command-line front end.
//!
//! Exit status: 0 on success, 2 for invalid arguments or inputs, 1 when a
//! computation fails.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use focklab::dbar::{read_field_csv, solve_dbar_field, write_field_csv, CauchyConfig, GaussMonomial};
use focklab::evaluator::{EvaluatorConfig, EvaluatorRegistry};
use focklab::reduce::{moment_matrix_scale_check, recover_deltas, scale_symbol, RecoveryOptions};
use focklab::symbol::{parse_complex, parse_symbol, Symbol};
use focklab::{decay_fit, mollify, selfcheck, Complex64, FockError, Grid, MomentMatrix};
use serde_json::json;

const SYMBOL_HELP: &str = "Symbol grammar, tokens joined by `;`:
  delta@<z>[*<c>]            c δ_z (weighted)
  ddelta[a,b]@<z>[*<c>]      c ∂^a ∂̄^b δ_z
  radial:gauss:<s>           radial profile e^{-s r²}
  polygauss:<a>,<b>,<s>,<c>  c z^a z̄^b e^{-s|z|²}
  zero
Complex numbers are written a, bi, a+bi or a-bi. A value naming an existing
file is read from that file.";

#[derive(Parser)]
#[command(name = "focklab", version, about = "Toeplitz forms on the Fock space", after_help = SYMBOL_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Truncated moment matrix of a symbol as JSON.
    Moments {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        n: usize,
        /// Evaluator backend: exact, exact-dd or quadrature.
        #[arg(long, default_value = "exact")]
        evaluator: String,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numeric rank of a matrix file; prints `rank=<r>`.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also print the singular values.
        #[arg(long)]
        verbose: bool,
    },
    /// Form values on reproducing kernels at a point set.
    KernelMatrix {
        #[arg(long)]
        symbol: String,
        /// Points joined by `;`.
        #[arg(long)]
        points: String,
        #[arg(long, default_value = "exact")]
        evaluator: String,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve ∂̄u = h on a grid for h = ∂̄(z̄^m z^n e^{-a|z|²}).
    Dbar {
        /// `m,n,a`.
        #[arg(long)]
        rhs: String,
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
        #[arg(long, default_value_t = 9.0)]
        support_radius: f64,
        #[arg(long, default_value_t = 96)]
        n_r: usize,
        #[arg(long, default_value_t = 96)]
        n_t: usize,
        /// Field CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit log|u| ≈ c - q|z|² on an annulus of a field CSV.
    DecayFit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
    },
    /// Mollify a function on a grid: gauss:<a>, abs, re or const:<c>.
    Mollify {
        #[arg(long)]
        function: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale a delta or polygauss symbol by t.
    Scale {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        t: f64,
        /// Also compare moment-matrix ranks at this truncation.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Recover the delta combination behind a moment matrix.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        max_steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selfcheck,
}

#[derive(clap::Args)]
struct QuadArgs {
    /// Quadrature radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
}

impl QuadArgs {
    fn config(&self) -> EvaluatorConfig {
        EvaluatorConfig { radius: self.radius, n_r: self.n_r, n_t: self.n_t }
    }
}

enum CliError {
    Invalid(String),
    Runtime(String),
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::BadParams(_)
            | FockError::Parse(_)
            | FockError::InvalidSymbol(_)
            | FockError::UnknownEvaluator(_)
            | FockError::TruncationTooLarge { .. }
            | FockError::UnsupportedSymbol { .. }
            | FockError::Overflow(_)
            | FockError::GridTooCoarse { .. } => CliError::Invalid(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var("FOCKLAB_THREADS") else { return Ok(()) };
    let n: usize = value.trim().parse().map_err(|_| format!("FOCKLAB_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        return Err("FOCKLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn symbol_arg(text: &str) -> CliResult<Symbol> {
    let path = Path::new(text);
    let spec = if path.is_file() { read_input(path)? } else { text.to_string() };
    Ok(parse_symbol(spec.trim())?)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Moments { symbol, n, evaluator, quad, out } => {
            let symbol = symbol_arg(&symbol)?;
            let backend = EvaluatorRegistry::standard().create(&evaluator, &quad.config())?;
            let m = backend.moment_matrix(&symbol, n)?;
            emit(out.as_deref(), &m.to_json())?;
        }
        Command::Rank { input, tol, verbose } => {
            positive("--tol", tol)?;
            if tol >= 1.0 {
                return Err(CliError::Invalid(format!("--tol must be below 1, got {tol}")));
            }
            let m = MomentMatrix::from_json(&read_input(&input)?)?;
            let cert = m.rank(tol);
            println!("rank={}", cert.rank);
            if verbose {
                println!("{}", serde_json::to_string(&cert).expect("certificate serialization"));
            }
        }
        Command::KernelMatrix { symbol, points, evaluator, quad, out } => {
            let symbol = symbol_arg(&symbol)?;
            let points: Vec<Complex64> = points
                .split(';')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(parse_complex)
                .collect::<focklab::Result<_>>()?;
            if points.is_empty() {
                return Err(CliError::Invalid("--points lists no points".into()));
            }
            let backend = EvaluatorRegistry::standard().create(&evaluator, &quad.config())?;
            let k = backend.kernel_matrix(&symbol, &points)?;
            emit(out.as_deref(), &k.to_json())?;
        }
        Command::Dbar { rhs, extent, spacing, support_radius, n_r, n_t, out } => {
            let fam = parse_family(&rhs)?;
            let grid = Grid::new(positive("--extent", extent)?, positive("--spacing", spacing)?)?;
            let cfg = CauchyConfig { support_radius: positive("--support-radius", support_radius)?, n_r, n_t };
            let field = solve_dbar_field(|z| fam.rhs(z), &grid, &cfg)?;
            if let Some(path) = &out {
                let file = fs::File::create(path)
                    .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
                write_field_csv(io::BufWriter::new(file), &grid, &field.u)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let summary = json!({
                "points": grid.len(),
                "residual": field.residual,
                "decay": field.decay,
            });
            println!("{summary}");
        }
        Command::DecayFit { input, r_min, r_max } => {
            let file = fs::File::open(&input)
                .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", input.display())))?;
            let rows = read_field_csv(BufReader::new(file))?;
            let samples: Vec<(Complex64, f64)> = rows.iter().map(|(z, u)| (*z, u.norm())).collect();
            let fit = decay_fit(&samples, (r_min, r_max))?;
            println!("{}", serde_json::to_string(&fit).expect("fit serialization"));
        }
        Command::Mollify { function, delta, extent, spacing, out } => {
            let f = parse_function(&function)?;
            let grid = Grid::new(positive("--extent", extent)?, positive("--spacing", spacing)?)?;
            let values = mollify(f, delta, &grid)?;
            let mut buf = Vec::new();
            write_field_csv(&mut buf, &grid, &values).map_err(|e| CliError::Runtime(e.to_string()))?;
            match out {
                Some(path) => fs::write(&path, buf)
                    .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
                None => io::stdout().write_all(&buf).map_err(|e| CliError::Runtime(e.to_string()))?,
            }
        }
        Command::Scale { symbol, t, n } => {
            let symbol = symbol_arg(&symbol)?;
            let scaled = scale_symbol(&symbol, t)?;
            let text = match &scaled {
                Symbol::Delta(d) if d.is_zero() => "zero".to_string(),
                Symbol::Delta(d) => d.to_string(),
                Symbol::PolyGaussian(p) => p.to_string(),
                _ => unreachable!("scale_symbol only returns delta or polygauss symbols"),
            };
            println!("{text}");
            if let Some(n) = n {
                let (before, after) = moment_matrix_scale_check(&symbol, t, n)?;
                println!("rank_before={before} rank_after={after}");
            }
        }
        Command::Reduce { input, tol, max_steps, out } => {
            positive("--tol", tol)?;
            let m = MomentMatrix::from_json(&read_input(&input)?)?;
            let result = recover_deltas(&m, RecoveryOptions { tol, max_steps })?;
            emit(out.as_deref(), &result.to_json())?;
        }
        Command::Selfcheck => {
            let outcomes = selfcheck::run_all();
            let mut failed = 0;
            for o in &outcomes {
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} {}", o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            println!("{} checks, {failed} failed", outcomes.len());
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_family(text: &str) -> CliResult<GaussMonomial> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Invalid(format!("--rhs expects m,n,a, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let m = parts[0].parse().map_err(|_| bad())?;
    let n = parts[1].parse().map_err(|_| bad())?;
    let a: f64 = parts[2].parse().map_err(|_| bad())?;
    Ok(GaussMonomial { m, n, a: positive("a", a)? })
}

fn parse_function(text: &str) -> CliResult<Box<dyn Fn(Complex64) -> Complex64 + Sync>> {
    if let Some(a) = text.strip_prefix("gauss:") {
        let a: f64 = a.parse().map_err(|_| CliError::Invalid(format!("bad exponent in `{text}`")))?;
        return Ok(Box::new(move |z: Complex64| Complex64::new((-a * z.norm_sqr()).exp(), 0.0)));
    }
    if let Some(c) = text.strip_prefix("const:") {
        let c = parse_complex(c)?;
        return Ok(Box::new(move |_| c));
    }
    match text {
        "abs" => Ok(Box::new(|z: Complex64| Complex64::new(z.norm(), 0.0))),
        "re" => Ok(Box::new(|z: Complex64| Complex64::new(z.re, 0.0))),
        _ => Err(CliError::Invalid(format!("unknown function `{text}`; use gauss:<a>, abs, re or const:<c>"))),
    }
}
