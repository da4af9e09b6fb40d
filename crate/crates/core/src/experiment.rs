//! Experiment pipeline: configuration, `C₀` evaluation, brute-force sums at
//! every `(X, Y)` and machine-readable reports.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::arith::FactorTables;
use crate::charsum::{mean_square, Method};
use crate::error::{Error, Result};
use crate::lfunc::{LSeriesAccessor, DEFAULT_L_TOLERANCE};
use crate::mainterm::{
    c0_contour, diagonal_constant, extrapolate_diagonal, ContourInputs, ContourSpec,
};
use crate::modform::{lambda_table, EigenformCoefficients};
use crate::windows::SmoothWindow;

/// Exact CSV header of [`emit_report`].
pub const CSV_HEADER: &str = "X,Y,S_brute,C0,predicted,ratio,abs_dev,seconds";

/// How `Y` follows `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YRule {
    Fixed(f64),
    /// `Y = ⌈√X⌉`.
    SqrtOfX,
    /// `Y = ⌈X^θ⌉`.
    Power(f64),
}

impl YRule {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            YRule::Fixed(y) => y,
            YRule::SqrtOfX => x.sqrt().ceil(),
            YRule::Power(theta) => x.powf(theta).ceil(),
        }
    }
}

impl fmt::Display for YRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YRule::Fixed(y) => write!(f, "fixed:{y}"),
            YRule::SqrtOfX => f.write_str("sqrt_of_x"),
            YRule::Power(t) => write!(f, "power:{t}"),
        }
    }
}

impl FromStr for YRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sqrt_of_x" || s == "sqrt" {
            return Ok(YRule::SqrtOfX);
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            return Ok(YRule::Fixed(parse_real(v)?));
        }
        if let Some(v) = s.strip_prefix("power:") {
            return Ok(YRule::Power(parse_real(v)?));
        }
        Err(Error::Config(format!("unknown y_rule `{s}`")))
    }
}

/// Which evaluation of `C₀` feeds the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C0Method {
    Diagonal,
    Contour,
    /// Both are computed; the contour value feeds the prediction.
    Both,
}

impl fmt::Display for C0Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            C0Method::Diagonal => "diagonal",
            C0Method::Contour => "contour",
            C0Method::Both => "both",
        })
    }
}

impl FromStr for C0Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "diagonal" => Ok(C0Method::Diagonal),
            "contour" => Ok(C0Method::Contour),
            "both" => Ok(C0Method::Both),
            other => Err(Error::Config(format!("unknown c0_method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Run configuration. The text form is flat `key = value` lines; `#` starts
/// a comment. Keys:
///
/// | key | value |
/// |-----|-------|
/// | `x_values` | comma-separated reals, `2^k` accepted |
/// | `y_rule` | `sqrt_of_x`, `fixed:<y>` or `power:<θ>` |
/// | `phi_support`, `psi_support` | `a,b` |
/// | `method` | `sieved` or `naive` |
/// | `c0_method` | `diagonal`, `contour` or `both` |
/// | `diagonal_y_min`, `diagonal_y_max` | extrapolation range of the diagonal |
/// | `diagonal_points_per_octave` | sampling density of that range |
/// | `epsilon` | contour line offset |
/// | `contour_rel_tol`, `contour_tail_tol`, `z2_tol` | contour tolerances |
/// | `prime_cutoff` | primes in the `Z₂` product |
/// | `l_terms`, `l_tolerance` | symmetric-square series length and target |
/// | `workers` | thread count |
/// | `out`, `format` | report destination and `csv` or `json` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub x_values: Vec<f64>,
    pub y_rule: YRule,
    pub phi_support: (f64, f64),
    pub psi_support: (f64, f64),
    pub method: Method,
    pub c0_method: C0Method,
    pub diagonal_y_min: f64,
    pub diagonal_y_max: f64,
    pub diagonal_points_per_octave: u32,
    pub epsilon: f64,
    pub contour_rel_tol: f64,
    pub contour_tail_tol: f64,
    pub z2_tol: f64,
    pub prime_cutoff: u64,
    pub l_terms: usize,
    pub l_tolerance: f64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let contour = ContourSpec::default();
        Self {
            x_values: (14..=18).map(|k| 2f64.powi(k)).collect(),
            y_rule: YRule::SqrtOfX,
            phi_support: (0.5, 1.0),
            psi_support: (0.5, 1.0),
            method: Method::Sieved,
            c0_method: C0Method::Contour,
            diagonal_y_min: 1024.0,
            diagonal_y_max: 16384.0,
            diagonal_points_per_octave: 16,
            epsilon: contour.epsilon,
            contour_rel_tol: contour.rel_tol,
            contour_tail_tol: contour.tail_tol,
            z2_tol: contour.z2_tol,
            prime_cutoff: contour.prime_cutoff,
            l_terms: 1 << 17,
            l_tolerance: DEFAULT_L_TOLERANCE,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = if let Some((base, exp)) = s.split_once('^') {
        let base: f64 = base
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number `{s}`")))?;
        let exp: i32 = exp
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number `{s}`")))?;
        base.powi(exp)
    } else {
        s.parse()
            .map_err(|_| Error::Config(format!("bad number `{s}`")))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Config(format!("non-finite number `{s}`")))
    }
}

fn parse_int<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad integer `{s}`")))
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("expected `a,b`, got `{s}`")))?;
    Ok((parse_real(a)?, parse_real(b)?))
}

impl ExperimentConfig {
    /// Parses the text form over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            c.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "x_values" => {
                self.x_values = value
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(parse_real)
                    .collect::<Result<_>>()?
            }
            "y_rule" => self.y_rule = value.parse()?,
            "phi_support" => self.phi_support = parse_pair(value)?,
            "psi_support" => self.psi_support = parse_pair(value)?,
            "method" => self.method = value.parse()?,
            "c0_method" => self.c0_method = value.parse()?,
            "diagonal_y_min" => self.diagonal_y_min = parse_real(value)?,
            "diagonal_y_max" => self.diagonal_y_max = parse_real(value)?,
            "diagonal_points_per_octave" => self.diagonal_points_per_octave = parse_int(value)?,
            "epsilon" => self.epsilon = parse_real(value)?,
            "contour_rel_tol" => self.contour_rel_tol = parse_real(value)?,
            "contour_tail_tol" => self.contour_tail_tol = parse_real(value)?,
            "z2_tol" => self.z2_tol = parse_real(value)?,
            "prime_cutoff" => self.prime_cutoff = parse_int(value)?,
            "l_terms" => self.l_terms = parse_int(value)?,
            "l_tolerance" => self.l_tolerance = parse_real(value)?,
            "workers" => self.workers = parse_int(value)?,
            "out" => {
                self.out = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "format" => self.format = value.parse()?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for &x in &self.x_values {
            if !(x >= 4.0) {
                return Err(Error::Config(format!("X = {x} must be at least 4")));
            }
            let y = self.y_rule.apply(x);
            if !(y >= 2.0 && y.is_finite()) {
                return Err(Error::Config(format!(
                    "y_rule gives Y = {y} < 2 at X = {x}"
                )));
            }
        }
        SmoothWindow::new(self.phi_support.0, self.phi_support.1)?;
        SmoothWindow::new(self.psi_support.0, self.psi_support.1)?;
        if self.workers < 1 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.diagonal_y_min >= 2.0 && self.diagonal_y_max > self.diagonal_y_min) {
            return Err(Error::Config(
                "diagonal range must satisfy 2 <= min < max".into(),
            ));
        }
        if self.diagonal_points_per_octave < 1 {
            return Err(Error::Config(
                "diagonal_points_per_octave must be positive".into(),
            ));
        }
        if !(self.l_tolerance > 0.0) || self.l_terms < 64 {
            return Err(Error::Config(
                "l_terms must be >= 64 and l_tolerance positive".into(),
            ));
        }
        self.contour_spec().validate()
    }

    pub fn contour_spec(&self) -> ContourSpec {
        ContourSpec {
            epsilon: self.epsilon,
            rel_tol: self.contour_rel_tol,
            tail_tol: self.contour_tail_tol,
            z2_tol: self.z2_tol,
            prime_cutoff: self.prime_cutoff,
            ..ContourSpec::default()
        }
    }

    pub fn phi(&self) -> Result<SmoothWindow> {
        SmoothWindow::new(self.phi_support.0, self.phi_support.1)
    }

    pub fn psi(&self) -> Result<SmoothWindow> {
        SmoothWindow::new(self.psi_support.0, self.psi_support.1)
    }

    /// `(X, Y)` in ascending `X`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut xs = self.x_values.clone();
        xs.sort_by(f64::total_cmp);
        xs.into_iter().map(|x| (x, self.y_rule.apply(x))).collect()
    }

    /// `Y` values sampled for the diagonal extrapolation.
    pub fn diagonal_grid(&self) -> Vec<f64> {
        let octaves = (self.diagonal_y_max / self.diagonal_y_min).log2();
        let steps = (octaves * self.diagonal_points_per_octave as f64)
            .round()
            .max(1.0) as u32;
        (0..=steps)
            .map(|j| {
                self.diagonal_y_min
                    * (self.diagonal_y_max / self.diagonal_y_min).powf(j as f64 / steps as f64)
            })
            .collect()
    }

    /// Text form that [`ExperimentConfig::parse`] maps back to `self`.
    pub fn to_config_string(&self) -> String {
        let xs: Vec<String> = self.x_values.iter().map(|x| x.to_string()).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("x_values", xs.join(","));
        kv("y_rule", self.y_rule.to_string());
        kv(
            "phi_support",
            format!("{},{}", self.phi_support.0, self.phi_support.1),
        );
        kv(
            "psi_support",
            format!("{},{}", self.psi_support.0, self.psi_support.1),
        );
        kv("method", self.method.to_string());
        kv("c0_method", self.c0_method.to_string());
        kv("diagonal_y_min", self.diagonal_y_min.to_string());
        kv("diagonal_y_max", self.diagonal_y_max.to_string());
        kv(
            "diagonal_points_per_octave",
            self.diagonal_points_per_octave.to_string(),
        );
        kv("epsilon", self.epsilon.to_string());
        kv("contour_rel_tol", self.contour_rel_tol.to_string());
        kv("contour_tail_tol", self.contour_tail_tol.to_string());
        kv("z2_tol", self.z2_tol.to_string());
        kv("prime_cutoff", self.prime_cutoff.to_string());
        kv("l_terms", self.l_terms.to_string());
        kv("l_tolerance", self.l_tolerance.to_string());
        kv("workers", self.workers.to_string());
        kv(
            "out",
            self.out
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv("format", self.format.to_string());
        s
    }
}

/// Coefficient and factorization tables sized for a configuration.
pub struct Workspace {
    pub coeffs: EigenformCoefficients,
    pub tables: FactorTables,
    pub acc: Option<LSeriesAccessor>,
}

impl Workspace {
    pub fn for_config(config: &ExperimentConfig) -> Result<Self> {
        let (_, phi_b) = config.phi_support;
        let (_, psi_b) = config.psi_support;
        let points = config.points();
        let y_max = points.iter().map(|p| p.1).fold(0.0, f64::max);
        let x_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
        let needs_contour = config.c0_method != C0Method::Diagonal;
        let needs_diagonal = config.c0_method != C0Method::Contour;
        let mut coeff_limit = (y_max * phi_b).floor() as usize;
        if needs_diagonal {
            coeff_limit = coeff_limit.max((config.diagonal_y_max * phi_b).floor() as usize);
        }
        if needs_contour {
            coeff_limit = coeff_limit
                .max(config.l_terms)
                .max(config.prime_cutoff as usize);
        }
        let coeff_limit = coeff_limit.max(16);
        let table_limit = (coeff_limit as f64).max(x_max * psi_b).floor() as u64;
        let coeffs = lambda_table(coeff_limit)?;
        let tables = FactorTables::build(table_limit)?;
        let acc = if needs_contour {
            Some(
                LSeriesAccessor::new(&coeffs, config.l_terms)?
                    .with_tolerance(config.l_tolerance)?,
            )
        } else {
            None
        };
        Ok(Self {
            coeffs,
            tables,
            acc,
        })
    }
}

/// `C₀` as used by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Summary {
    pub method: C0Method,
    /// Value feeding the prediction.
    pub value: f64,
    pub error: f64,
    pub diagonal: Option<f64>,
    /// Largest residual of the diagonal fit.
    pub diagonal_fit_residual: Option<f64>,
    pub contour: Option<f64>,
    pub contour_error: Option<f64>,
    pub contour_imag: Option<f64>,
    pub seconds: f64,
}

impl C0Summary {
    /// `|contour − diagonal| / |contour|` when both are present.
    pub fn relative_disagreement(&self) -> Option<f64> {
        match (self.diagonal, self.contour) {
            (Some(d), Some(c)) => Some((c - d).abs() / c.abs()),
            _ => None,
        }
    }
}

/// Extrapolated diagonal constant over the configured grid.
pub fn diagonal_c0(config: &ExperimentConfig, ws: &Workspace) -> Result<(f64, f64)> {
    let (phi, psi) = (config.phi()?, config.psi()?);
    let points = config
        .diagonal_grid()
        .into_iter()
        .map(|y| Ok((y, diagonal_constant(y, &phi, &psi, &ws.coeffs, &ws.tables)?)))
        .collect::<Result<Vec<_>>>()?;
    let fit = extrapolate_diagonal(&points)?;
    Ok((fit.limit, fit.max_residual))
}

pub fn compute_c0(config: &ExperimentConfig, ws: &Workspace) -> Result<C0Summary> {
    let start = Instant::now();
    let mut summary = C0Summary {
        method: config.c0_method,
        value: f64::NAN,
        error: f64::NAN,
        diagonal: None,
        diagonal_fit_residual: None,
        contour: None,
        contour_error: None,
        contour_imag: None,
        seconds: 0.0,
    };
    if config.c0_method != C0Method::Contour {
        let (value, residual) = diagonal_c0(config, ws)?;
        summary.diagonal = Some(value);
        summary.diagonal_fit_residual = Some(residual);
        summary.value = value;
        summary.error = residual;
    }
    if config.c0_method != C0Method::Diagonal {
        let acc = ws
            .acc
            .as_ref()
            .ok_or_else(|| Error::Config("workspace lacks the symmetric-square series".into()))?;
        let (phi, psi) = (config.phi()?, config.psi()?);
        let inputs = ContourInputs {
            phi: &phi,
            psi: &psi,
            acc,
            coeffs: &ws.coeffs,
            tables: &ws.tables,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let est = pool.install(|| c0_contour(&inputs, &config.contour_spec()))?;
        summary.contour = Some(est.value);
        summary.contour_error = Some(est.error);
        summary.contour_imag = Some(est.imag);
        summary.value = est.value;
        summary.error = est.error;
    }
    summary.seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// One `(X, Y)` row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "S_brute")]
    pub s_brute: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub c0_method: C0Method,
    pub c0_diagonal: Option<f64>,
    pub c0_contour: Option<f64>,
    pub predicted: f64,
    pub ratio: f64,
    pub abs_dev: f64,
    pub n_d_terms: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: String,
    pub c0: Option<C0Summary>,
    pub records: Vec<Record>,
    /// Least-squares slope of `ln|ratio − 1|` against `ln X`.
    pub decay_slope: Option<f64>,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

impl ExperimentReport {
    pub fn empty(config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.to_config_string(),
            c0: None,
            records: Vec::new(),
            decay_slope: None,
            failure: None,
        }
    }

    pub fn update_slope(&mut self) {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.abs_dev > 0.0)
            .map(|r| (r.x.ln(), r.abs_dev.ln()))
            .collect();
        self.decay_slope = least_squares_slope(&pts);
    }

    /// Records with wall times zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.seconds = 0.0;
        }
        if let Some(c) = &mut r.c0 {
            c.seconds = 0.0;
        }
        r
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// A run that stopped at a failing step, with everything computed before it.
#[derive(Debug)]
pub struct VerifyFailure {
    pub report: ExperimentReport,
    pub error: Error,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for VerifyFailure {}

/// Computes `C₀` once, then `S(X, Y)` at every configured point.
pub fn run_verify(
    config: &ExperimentConfig,
) -> std::result::Result<ExperimentReport, Box<VerifyFailure>> {
    let mut report = ExperimentReport::empty(config);
    let fail = |mut report: ExperimentReport, error: Error, at: &str| {
        report.failure = Some(format!("{at}: {error}"));
        report.update_slope();
        Box::new(VerifyFailure { report, error })
    };
    if let Err(e) = config.validate() {
        return Err(fail(report, e, "configuration"));
    }
    let ws = match Workspace::for_config(config) {
        Ok(ws) => ws,
        Err(e) => return Err(fail(report, e, "table construction")),
    };
    let c0 = match compute_c0(config, &ws) {
        Ok(c) => c,
        Err(e) => return Err(fail(report, e, "C0 evaluation")),
    };
    report.c0 = Some(c0.clone());
    let (phi, psi) = match (config.phi(), config.psi()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Err(fail(report, e, "windows")),
    };
    for (x, y) in config.points() {
        match mean_square(
            x,
            y,
            &phi,
            &psi,
            &ws.coeffs,
            &ws.tables,
            config.method,
            config.workers,
        ) {
            Ok(p) => {
                let predicted = c0.value * x * y;
                let ratio = p.value_s / predicted;
                report.records.push(Record {
                    x,
                    y,
                    s_brute: p.value_s,
                    c0: c0.value,
                    c0_method: c0.method,
                    c0_diagonal: c0.diagonal,
                    c0_contour: c0.contour,
                    predicted,
                    ratio,
                    abs_dev: (ratio - 1.0).abs(),
                    n_d_terms: p.n_d_terms,
                    seconds: p.wall_time,
                });
            }
            Err(e) => return Err(fail(report, e, &format!("S_brute at X = {x}, Y = {y}"))),
        }
    }
    report.update_slope();
    Ok(report)
}

/// Outcome of the convergence criteria on a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceVerdict {
    pub first_ratio: f64,
    pub first_ratio_in_range: bool,
    /// `|ratio − 1|` strictly decreasing over the last three points.
    pub tail_decreasing: bool,
    pub slope: Option<f64>,
    pub slope_ok: bool,
}

impl ConvergenceVerdict {
    pub const RATIO_RANGE: (f64, f64) = (0.5, 1.5);
    pub const MAX_SLOPE: f64 = -0.10;

    pub fn of(report: &ExperimentReport) -> Option<Self> {
        let recs = &report.records;
        if recs.len() < 3 {
            return None;
        }
        let first_ratio = recs[0].ratio;
        let tail = &recs[recs.len() - 3..];
        let tail_decreasing = tail.windows(2).all(|w| w[1].abs_dev < w[0].abs_dev);
        let slope = report.decay_slope;
        Some(Self {
            first_ratio,
            first_ratio_in_range: first_ratio >= Self::RATIO_RANGE.0
                && first_ratio <= Self::RATIO_RANGE.1,
            tail_decreasing,
            slope,
            slope_ok: slope.is_some_and(|s| s <= Self::MAX_SLOPE),
        })
    }

    pub fn passed(&self) -> bool {
        self.first_ratio_in_range && self.tail_decreasing && self.slope_ok
    }
}

fn csv_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV row for one record.
pub fn csv_row(r: &Record) -> String {
    [
        r.x,
        r.y,
        r.s_brute,
        r.c0,
        r.predicted,
        r.ratio,
        r.abs_dev,
        r.seconds,
    ]
    .iter()
    .map(|&v| csv_number(v))
    .collect::<Vec<_>>()
    .join(",")
}

pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub fn report_to_json(report: &ExperimentReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
}

/// Numeric rows of a CSV report, one array per record in header order.
pub fn parse_csv(text: &str) -> Result<Vec<[f64; 8]>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Io("missing or wrong CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != 8 {
                return Err(Error::Io(format!("expected 8 columns in `{l}`")));
            }
            let mut row = [0.0; 8];
            for (slot, cell) in row.iter_mut().zip(cells) {
                *slot = cell
                    .parse()
                    .map_err(|_| Error::Io(format!("bad number `{cell}`")))?;
            }
            Ok(row)
        })
        .collect()
}

pub fn parse_json(text: &str) -> Result<ExperimentReport> {
    serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
}

/// Writes the report to `path` in `format`.
pub fn emit_report(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => report_to_csv(report),
        OutputFormat::Json => report_to_json(report)?,
    };
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// One timing sample of the brute-force kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub method: Method,
    pub value_s: f64,
    pub n_d_terms: u64,
    pub seconds: f64,
}

pub const SCALING_CSV_HEADER: &str = "X,Y,method,S,n_d_terms,seconds";

/// Times both kernels at every configured point.
pub fn run_scaling(config: &ExperimentConfig) -> Result<Vec<ScalingRecord>> {
    config.validate()?;
    let diagonal_only = ExperimentConfig {
        c0_method: C0Method::Diagonal,
        diagonal_y_min: 2.0,
        diagonal_y_max: 4.0,
        ..config.clone()
    };
    let ws = Workspace::for_config(&diagonal_only)?;
    let (phi, psi) = (config.phi()?, config.psi()?);
    let mut out = Vec::new();
    for (x, y) in config.points() {
        for method in [Method::Naive, Method::Sieved] {
            let p = mean_square(
                x,
                y,
                &phi,
                &psi,
                &ws.coeffs,
                &ws.tables,
                method,
                config.workers,
            )?;
            out.push(ScalingRecord {
                x,
                y,
                method,
                value_s: p.value_s,
                n_d_terms: p.n_d_terms,
                seconds: p.wall_time,
            });
        }
    }
    Ok(out)
}

pub fn scaling_to_csv(records: &[ScalingRecord]) -> String {
    let mut s = String::from(SCALING_CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_number(r.x),
            csv_number(r.y),
            r.method,
            csv_number(r.value_s),
            r.n_d_terms,
            csv_number(r.seconds)
        ));
    }
    s
}
