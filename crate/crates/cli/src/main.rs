//! Command-line driver: verification suites, brute-force sums, `C₀`
//! evaluation and the full experiment pipeline.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use twistmoment::arith::FactorTables;
use twistmoment::charsum::{mean_square, Method};
use twistmoment::experiment::{
    compute_c0, emit_report, report_to_csv, report_to_json, run_scaling, run_verify,
    scaling_to_csv, C0Method, ConvergenceVerdict, ExperimentConfig, OutputFormat, Workspace, YRule,
};
use twistmoment::gauss::verify_gauss;
use twistmoment::mainterm::diagonal_constant;
use twistmoment::quad::QuadratureSpec;
use twistmoment::windows::poisson_check;
use twistmoment::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "twistmoment",
    version,
    about = "Twisted second-moment experiments for the weight-12 cusp form"
)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Naive,
    Sieved,
}

#[derive(Clone, Copy, ValueEnum)]
enum C0Arg {
    Diagonal,
    Contour,
}

#[derive(Subcommand)]
enum Verb {
    /// Closed-form Gauss sums against direct summation.
    VerifyGauss {
        #[arg(long, default_value_t = 2001)]
        m_max: u64,
        #[arg(long, default_value_t = 60)]
        k_max: i64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Poisson summation identity for the twisted d-sum.
    VerifyPoisson {
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 3, 15, 105])]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [25.0, 100.0])]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Brute-force mean square S(X, Y).
    Brute {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, value_enum, default_value_t = KernelArg::Sieved)]
        method: KernelArg,
    },
    /// Leading constant C₀.
    C0 {
        #[arg(long, value_enum, default_value_t = C0Arg::Contour)]
        method: C0Arg,
        /// Single cutoff for the diagonal method; the configured
        /// extrapolation is used when absent.
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Full pipeline: C₀ once, S(X, Y) at every configured point.
    Verify,
    /// Naive and sieved kernel timings at every configured point.
    Scaling,
}

/// Failure classes mapped to exit codes.
enum Outcome {
    Failed(String),
    Config(String),
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Outcome::Config(e.to_string()),
            other => Outcome::Failed(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Outcome> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(f) = cli.format {
        config.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.validate()?;
    Ok(config)
}

fn write_output(out: Option<&PathBuf>, body: &str) -> Result<(), Outcome> {
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| Outcome::Failed(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&PathBuf>, value: &Value) -> Result<(), Outcome> {
    let body =
        serde_json::to_string_pretty(value).map_err(|e| Outcome::Failed(e.to_string()))? + "\n";
    write_output(out, &body)
}

/// Returns whether every check passed.
fn run(cli: &Cli) -> Result<bool, Outcome> {
    let config = load_config(cli)?;
    let out = config.out.as_ref();
    match &cli.verb {
        Verb::VerifyGauss { m_max, k_max, tol } => {
            let v = verify_gauss(*m_max, *k_max, *tol)?;
            emit_json(
                out,
                &json!({
                    "check": "gauss",
                    "m_max": v.m_max,
                    "k_max": v.k_max,
                    "cases": v.cases,
                    "tolerance": tol,
                    "max_scaled_deviation": v.max_scaled_deviation,
                    "max_scaled_imag": v.max_scaled_imag,
                    "failures": v.failures.len(),
                    "passed": v.passed(),
                }),
            )?;
            Ok(v.passed())
        }
        Verb::VerifyPoisson { n, x, tol } => {
            let psi = config.psi()?;
            let n_max = n.iter().copied().max().unwrap_or(1);
            let tables = FactorTables::build(n_max.max(2))?;
            let q = QuadratureSpec::default();
            let mut rows = Vec::new();
            let mut all = true;
            for &nn in n {
                for &xx in x {
                    let c = poisson_check(nn, xx, &psi, &tables, &q, 1e-3 * tol)?;
                    let ok = c.relative_residual() <= *tol;
                    all &= ok;
                    rows.push(json!({
                        "n": c.n, "X": c.x, "lhs": c.lhs, "rhs": c.rhs, "k_max": c.k_max,
                        "relative_residual": c.relative_residual(), "passed": ok,
                    }));
                }
            }
            emit_json(
                out,
                &json!({ "check": "poisson", "tolerance": tol, "cases": rows, "passed": all }),
            )?;
            Ok(all)
        }
        Verb::Brute { x, y, method } => {
            let cfg = ExperimentConfig {
                x_values: vec![*x],
                y_rule: YRule::Fixed(*y),
                c0_method: C0Method::Diagonal,
                diagonal_y_min: 2.0,
                diagonal_y_max: 4.0,
                ..config.clone()
            };
            cfg.validate()?;
            let ws = Workspace::for_config(&cfg)?;
            let method = match method {
                KernelArg::Naive => Method::Naive,
                KernelArg::Sieved => Method::Sieved,
            };
            let p = mean_square(
                *x,
                *y,
                &cfg.phi()?,
                &cfg.psi()?,
                &ws.coeffs,
                &ws.tables,
                method,
                cfg.workers,
            )?;
            let value = serde_json::to_value(p).map_err(|e| Outcome::Failed(e.to_string()))?;
            emit_json(out, &value)?;
            Ok(true)
        }
        Verb::C0 { method, y, epsilon } => {
            let mut cfg = config.clone();
            if let Some(e) = epsilon {
                cfg.epsilon = *e;
            }
            match (method, y) {
                (C0Arg::Diagonal, Some(y)) => {
                    let cfg = ExperimentConfig {
                        diagonal_y_min: (y / 2.0).max(2.0),
                        diagonal_y_max: y.max(4.0),
                        c0_method: C0Method::Diagonal,
                        ..cfg
                    };
                    cfg.validate()?;
                    let ws = Workspace::for_config(&cfg)?;
                    let (phi, psi) = (cfg.phi()?, cfg.psi()?);
                    let value = diagonal_constant(*y, &phi, &psi, &ws.coeffs, &ws.tables)?;
                    let half = diagonal_constant(y / 2.0, &phi, &psi, &ws.coeffs, &ws.tables)?;
                    emit_json(
                        out,
                        &json!({
                            "method": "diagonal",
                            "value": value,
                            "error": (value - half).abs(),
                            "error_kind": "difference from Y/2",
                            "parameters": { "Y": y, "phi_support": cfg.phi_support, "psi_support": cfg.psi_support },
                        }),
                    )?;
                }
                _ => {
                    cfg.c0_method = match method {
                        C0Arg::Diagonal => C0Method::Diagonal,
                        C0Arg::Contour => C0Method::Contour,
                    };
                    cfg.x_values.clear();
                    cfg.validate()?;
                    let ws = Workspace::for_config(&cfg)?;
                    let c0 = compute_c0(&cfg, &ws)?;
                    let parameters = match cfg.c0_method {
                        C0Method::Diagonal => json!({
                            "y_min": cfg.diagonal_y_min,
                            "y_max": cfg.diagonal_y_max,
                            "points_per_octave": cfg.diagonal_points_per_octave,
                            "phi_support": cfg.phi_support, "psi_support": cfg.psi_support,
                        }),
                        _ => json!({
                            "epsilon": cfg.epsilon,
                            "rel_tol": cfg.contour_rel_tol,
                            "tail_tol": cfg.contour_tail_tol,
                            "prime_cutoff": cfg.prime_cutoff,
                            "phi_support": cfg.phi_support, "psi_support": cfg.psi_support,
                        }),
                    };
                    emit_json(
                        out,
                        &json!({
                            "method": cfg.c0_method.to_string(),
                            "value": c0.value,
                            "error": c0.error,
                            "imag": c0.contour_imag,
                            "seconds": c0.seconds,
                            "parameters": parameters,
                        }),
                    )?;
                }
            }
            Ok(true)
        }
        Verb::Verify => {
            let (report, failure) = match run_verify(&config) {
                Ok(r) => (r, None),
                Err(f) => (f.report, Some(f.error)),
            };
            match out {
                Some(path) => emit_report(&report, config.format, path)?,
                None => {
                    let body = match config.format {
                        OutputFormat::Csv => report_to_csv(&report),
                        OutputFormat::Json => report_to_json(&report)? + "\n",
                    };
                    print!("{body}");
                }
            }
            if let Some(e) = failure {
                return Err(e.into());
            }
            let verdict = ConvergenceVerdict::of(&report);
            if let Some(v) = &verdict {
                eprintln!(
                    "first ratio {:.6} (in range: {}), tail decreasing: {}, slope {:?} (ok: {})",
                    v.first_ratio, v.first_ratio_in_range, v.tail_decreasing, v.slope, v.slope_ok
                );
            }
            let c0_ok = report
                .c0
                .as_ref()
                .and_then(|c| c.relative_disagreement())
                .is_none_or(|d| d <= 0.01);
            Ok(c0_ok && verdict.is_none_or(|v| v.passed()))
        }
        Verb::Scaling => {
            let recs = run_scaling(&config)?;
            let body = match config.format {
                OutputFormat::Csv => scaling_to_csv(&recs),
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&recs)
                        .map_err(|e| Outcome::Failed(e.to_string()))?
                        + "\n"
                }
            };
            write_output(out, &body)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILURE),
        Err(Outcome::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Outcome::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
