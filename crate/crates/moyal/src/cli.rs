//! Command-line front end. Exit codes: 0 pass, 1 verification failure,
//! 2 usage, 3 truncation guard, 4 I/O.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::element::check_translation;
use crate::error::Error;
use crate::fock::{TruncationPolicy, C64, DEFAULT_PAD, DEFAULT_THETA};
use crate::lipschitz::BALL_TOL;
use crate::optimal::{beta_thresholds, default_beta_grid, schur_certificate};
use crate::solver::{
    detect_translation, double_distance, maximize_distance, translation_distance, DistanceEstimate, Sheet,
    SolverOptions, UPPER_SLACK,
};
use crate::state::{coherent_state, eigenstate, ground_state, translate_state, MixedState};
use crate::symplectic::quantum_length_squared;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_STORE_DIM: usize = 128;
const DEFAULT_TOLERANCE: f64 = 1e-6;
const DEFAULT_REL_TOLERANCE: f64 = 0.02;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::TruncationOverflow(_) | Error::InsufficientTruncation { .. } | Error::OutOfRange { .. } => {
                EXIT_TRUNCATION
            }
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            Error::Inconsistent(_) | Error::InvalidWitness(_) => EXIT_FAIL,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self { code: EXIT_IO, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::usage(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

/// Fully resolved run settings; embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub theta: f64,
    pub store_dim: usize,
    pub pad: usize,
    pub beta_grid: Vec<f64>,
    pub seed: u64,
    pub tolerance: f64,
    pub rel_tolerance: f64,
    pub restarts: usize,
    pub max_iter: usize,
    /// `None` picks json for reports and csv for tables.
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            restarts: self.restarts,
            max_iter: self.max_iter,
            seed: self.seed,
            pad: self.pad,
            beta_grid: Some(self.beta_grid.clone()),
            ..Default::default()
        }
    }
}

/// Raw settings before defaults apply; fed by the config file, then flags.
#[derive(Clone, Debug, Default)]
struct ConfigLayer {
    theta: Option<f64>,
    store_dim: Option<usize>,
    pad: Option<usize>,
    beta_grid: Option<String>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    rel_tolerance: Option<f64>,
    restarts: Option<usize>,
    max_iter: Option<usize>,
    format: Option<String>,
    output: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim().parse().map_err(|_| CliError::usage(format!("bad value for {key}: '{v}'")))
}

impl ConfigLayer {
    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "theta" => self.theta = Some(parse_value(&key, v)?),
            "store-dim" => self.store_dim = Some(parse_value(&key, v)?),
            "pad" => self.pad = Some(parse_value(&key, v)?),
            "beta-grid" => self.beta_grid = Some(v.to_string()),
            "seed" => self.seed = Some(parse_value(&key, v)?),
            "tolerance" => self.tolerance = Some(parse_value(&key, v)?),
            "rel-tolerance" => self.rel_tolerance = Some(parse_value(&key, v)?),
            "restarts" => self.restarts = Some(parse_value(&key, v)?),
            "max-iter" => self.max_iter = Some(parse_value(&key, v)?),
            "format" => self.format = Some(v.to_string()),
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(CliError::usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    fn parse_file(text: &str) -> CliResult<Self> {
        let mut layer = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", no + 1)))?;
            layer.set(k, v)?;
        }
        Ok(layer)
    }

    fn overlay(self, top: Self) -> Self {
        Self {
            theta: top.theta.or(self.theta),
            store_dim: top.store_dim.or(self.store_dim),
            pad: top.pad.or(self.pad),
            beta_grid: top.beta_grid.or(self.beta_grid),
            seed: top.seed.or(self.seed),
            tolerance: top.tolerance.or(self.tolerance),
            rel_tolerance: top.rel_tolerance.or(self.rel_tolerance),
            restarts: top.restarts.or(self.restarts),
            max_iter: top.max_iter.or(self.max_iter),
            format: top.format.or(self.format),
            output: top.output.or(self.output),
        }
    }

    fn resolve(self) -> CliResult<RunConfig> {
        let defaults = SolverOptions::default();
        let theta = self.theta.unwrap_or(DEFAULT_THETA);
        if !(theta.is_finite() && theta > 0.0) {
            return Err(CliError::usage(format!("theta must be positive, got {theta}")));
        }
        let policy = TruncationPolicy::new(self.store_dim.unwrap_or(DEFAULT_STORE_DIM), self.pad.unwrap_or(DEFAULT_PAD))?;
        let beta_grid = match self.beta_grid.as_deref() {
            None => default_beta_grid(policy.store_dim),
            Some(text) => parse_beta_grid(text, policy.store_dim)?,
        };
        let positive = |name: &str, v: f64| -> CliResult<f64> {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::usage(format!("{name} must be positive, got {v}")))
            }
        };
        let restarts = self.restarts.unwrap_or(defaults.restarts);
        let max_iter = self.max_iter.unwrap_or(defaults.max_iter);
        if restarts == 0 || max_iter == 0 {
            return Err(CliError::usage("restarts and max-iter must be at least 1"));
        }
        Ok(RunConfig {
            theta,
            store_dim: policy.store_dim,
            pad: policy.pad,
            beta_grid,
            seed: self.seed.unwrap_or(0),
            tolerance: positive("tolerance", self.tolerance.unwrap_or(DEFAULT_TOLERANCE))?,
            rel_tolerance: positive("rel-tolerance", self.rel_tolerance.unwrap_or(DEFAULT_REL_TOLERANCE))?,
            restarts,
            max_iter,
            format: self.format.as_deref().map(Format::from_str).transpose()?,
            output: self.output,
        })
    }
}

fn parse_beta(token: &str) -> CliResult<f64> {
    let t = token.trim();
    if t.eq_ignore_ascii_case("beta1") {
        return Ok(beta_thresholds().beta1);
    }
    parse_value("beta-grid", t)
}

/// `default`, a comma list (`beta1` names the threshold), or
/// `geometric:lo:hi:count` with log-spaced points including both ends.
pub fn parse_beta_grid(text: &str, store_dim: usize) -> CliResult<Vec<f64>> {
    let text = text.trim();
    let values = if text.eq_ignore_ascii_case("default") {
        default_beta_grid(store_dim)
    } else if let Some(rest) = text.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::usage("geometric grid is geometric:lo:hi:count"));
        }
        let (lo, hi) = (parse_beta(parts[0])?, parse_beta(parts[1])?);
        let n: usize = parse_value("beta-grid", parts[2])?;
        if n == 0 || !(lo > 0.0 && hi >= lo) {
            return Err(CliError::usage("geometric grid needs 0 < lo <= hi and count >= 1"));
        }
        if n == 1 {
            vec![lo]
        } else {
            let r = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|k| if k + 1 == n { hi } else { lo * (r * k as f64).exp() }).collect()
        }
    } else {
        text.split(',').map(parse_beta).collect::<CliResult<Vec<_>>>()?
    };
    let b1 = beta_thresholds().beta1;
    if values.is_empty() {
        return Err(CliError::usage("beta grid is empty"));
    }
    for &b in &values {
        if !(b > 0.0 && b <= b1 * (1.0 + 1e-12)) {
            return Err(CliError::usage(format!("beta {b} outside (0, {b1}]")));
        }
    }
    Ok(values)
}

/// `a`, `a+bi`, `bi`, `-i`, or polar `r@t`.
pub fn parse_complex(text: &str) -> CliResult<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::usage(format!("bad complex number '{text}'"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((r, t)) = s.split_once('@') {
        let r: f64 = r.parse().map_err(|_| bad())?;
        let t: f64 = t.parse().map_err(|_| bad())?;
        return Ok(C64::from_polar(r, t));
    }
    let z = if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let imag = |t: &str| -> CliResult<f64> {
            match t {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                _ => t.parse().map_err(|_| bad()),
            }
        };
        match split {
            Some(k) => C64::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?),
            None => C64::new(0.0, imag(body)?),
        }
    } else {
        C64::new(s.parse().map_err(|_| bad())?, 0.0)
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

pub fn parse_complex_list(text: &str) -> CliResult<Vec<C64>> {
    let v: Vec<C64> = text.split(',').filter(|t| !t.trim().is_empty()).map(parse_complex).collect::<CliResult<_>>()?;
    if v.is_empty() {
        return Err(CliError::usage("empty kappa list"));
    }
    Ok(v)
}

/// `ground`, `coherent:<complex>`, `eigen:<n>` or `mixed:<path>`.
pub fn build_state(text: &str, cfg: &RunConfig) -> CliResult<MixedState> {
    let text = text.trim();
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    let state = match kind {
        "ground" if arg.is_empty() => ground_state(cfg.store_dim, cfg.theta)?,
        "coherent" => coherent_state(parse_complex(arg)?, cfg.store_dim, cfg.theta)?,
        "eigen" => {
            let n: usize = parse_value("eigen", arg)?;
            eigenstate(n, cfg.store_dim, cfg.theta)?
        }
        "mixed" => {
            let path = Path::new(arg);
            let text = fs::read_to_string(path).map_err(|e| CliError {
                code: EXIT_IO,
                message: format!("{}: {e}", path.display()),
            })?;
            let s = MixedState::from_json(&text)?;
            if s.theta() != cfg.theta {
                return Err(CliError::usage(format!("state file theta {} differs from theta {}", s.theta(), cfg.theta)));
            }
            if s.dim() > cfg.store_dim {
                return Err(CliError {
                    code: EXIT_TRUNCATION,
                    message: format!("state file has {} levels, store-dim is {}", s.dim(), cfg.store_dim),
                });
            }
            s.embed(cfg.store_dim)?
        }
        _ => return Err(CliError::usage(format!("bad state text '{text}' (ground | coherent:k | eigen:n | mixed:file)"))),
    };
    if let Some(w) = state.accuracy_warning() {
        log::warn!("{text}: {w}");
    }
    Ok(state)
}

#[derive(Parser, Debug)]
#[command(name = "moyal", version, about = "Spectral distances on the truncated Moyal plane")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Every config key is also a flag of the same name.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, global = true)]
    pub store_dim: Option<String>,
    #[arg(long, global = true)]
    pub pad: Option<String>,
    /// `default`, `b1,b2,...` or `geometric:lo:hi:count`.
    #[arg(long, global = true)]
    pub beta_grid: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub tolerance: Option<String>,
    #[arg(long, global = true)]
    pub rel_tolerance: Option<String>,
    #[arg(long, global = true)]
    pub restarts: Option<String>,
    #[arg(long, global = true)]
    pub max_iter: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

impl ConfigArgs {
    fn layer(&self) -> CliResult<ConfigLayer> {
        let mut l = ConfigLayer::default();
        let pairs = [
            ("theta", &self.theta),
            ("store-dim", &self.store_dim),
            ("pad", &self.pad),
            ("beta-grid", &self.beta_grid),
            ("seed", &self.seed),
            ("tolerance", &self.tolerance),
            ("rel-tolerance", &self.rel_tolerance),
            ("restarts", &self.restarts),
            ("max-iter", &self.max_iter),
            ("format", &self.format),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                l.set(k, v)?;
            }
        }
        l.output = self.output.clone();
        Ok(l)
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", p.display()) })?;
                ConfigLayer::parse_file(&text)?
            }
            None => ConfigLayer::default(),
        };
        base.overlay(self.layer()?).resolve()
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bracket d(phi, phi o alpha_kappa) against |kappa|.
    VerifyTranslation {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, default_value = "ground")]
        state: String,
    },
    /// Two-sheet distance of a translated pair against sqrt(|kappa|^2 + 1/lambda^2).
    VerifyPythagoras {
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "ground")]
        state: String,
    },
    /// Schur certificates over the beta grid.
    SchurScan,
    /// Solver distance between coherent states against sqrt2 |k - k_ref|.
    CoherentTable {
        #[arg(long, allow_hyphen_values = true)]
        kappa_list: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        kappa_ref: String,
    },
    /// Quantum length moments of coherent pairs against sqrt2 |k - k_ref|.
    DfrCompare {
        #[arg(long, allow_hyphen_values = true)]
        kappa_list: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        kappa_ref: String,
    },
    /// Certified lower bound between two states.
    Solve {
        #[arg(long)]
        state_a: String,
        #[arg(long)]
        state_b: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyTranslation { .. } => "verify-translation",
            Command::VerifyPythagoras { .. } => "verify-pythagoras",
            Command::SchurScan => "schur-scan",
            Command::CoherentTable { .. } => "coherent-table",
            Command::DfrCompare { .. } => "dfr-compare",
            Command::Solve { .. } => "solve",
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a, R: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    report: &'a R,
}

#[derive(Serialize)]
struct JsonTable<'a, R: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    rows: &'a [R],
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

fn open_output(cfg: &RunConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", p.display()) })?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Path of the config file written next to a CSV output.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn emit<R: Serialize>(cfg: &RunConfig, command: &str, rows: &[R], single: bool) -> CliResult<()> {
    let format = cfg.format.unwrap_or(if single { Format::Json } else { Format::Csv });
    let mut out = open_output(cfg)?;
    match format {
        Format::Json => {
            let text = if single {
                serde_json::to_string_pretty(&JsonReport { command, config: cfg, report: &rows[0] })
            } else {
                serde_json::to_string_pretty(&JsonTable { command, config: cfg, rows })
            }
            .map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
            writeln!(out, "{text}")?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
            }
            w.flush()?;
            if let Some(p) = &cfg.output {
                let text = serde_json::to_string_pretty(&Sidecar { command, config: cfg })
                    .map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
                fs::write(sidecar_path(p), text + "\n")?;
            }
            return Ok(());
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TranslationReport {
    state: String,
    kappa_re: f64,
    kappa_im: f64,
    lower: f64,
    upper: f64,
    gap: f64,
    allowed_gap: f64,
    pass: bool,
    beta: Option<f64>,
    dim: usize,
    iterations: usize,
    witness_ref: String,
}

#[derive(Serialize)]
struct PythagorasReport {
    state: String,
    kappa_re: f64,
    kappa_im: f64,
    lambda: f64,
    same_sheet_lower: f64,
    same_sheet_upper: f64,
    internal_lower: f64,
    internal_upper: f64,
    cross_lower: f64,
    cross_upper: f64,
    target: f64,
    residual: f64,
    pass: bool,
    dim: usize,
    iterations: usize,
    witness_ref: String,
}

#[derive(Serialize)]
struct SchurRow {
    beta: f64,
    row_sup: f64,
    col_sup: f64,
    schur_bound: f64,
    exact_norm: f64,
    in_ball: bool,
}

#[derive(Serialize)]
struct CoherentRow {
    kappa_ref_re: f64,
    kappa_ref_im: f64,
    kappa_re: f64,
    kappa_im: f64,
    chord: f64,
    #[serde(rename = "dD_exact")]
    dist_exact: f64,
    #[serde(rename = "dD_lower")]
    dist_lower: f64,
    rel_err: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct DfrRow {
    kappa_re: f64,
    kappa_im: f64,
    #[serde(rename = "dL2_self")]
    length_self: f64,
    #[serde(rename = "dL2_pair")]
    length_pair: f64,
    sqrt_gap: f64,
    #[serde(rename = "dD_exact")]
    dist_exact: f64,
    rel_err: f64,
}

#[derive(Serialize)]
struct SolveReport {
    state_a: String,
    state_b: String,
    lower: f64,
    upper: Option<f64>,
    gap: Option<f64>,
    beta: Option<f64>,
    dim: usize,
    iterations: usize,
    witness_ref: String,
    translation_re: Option<f64>,
    translation_im: Option<f64>,
    unbounded_suspect: bool,
}

fn status(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn verify_translation(cfg: &RunConfig, kappa: &str, text: &str) -> CliResult<i32> {
    let kappa = parse_complex(kappa)?;
    let phi = build_state(text, cfg)?;
    check_translation(kappa, cfg.theta, cfg.store_dim)?;
    let est = translation_distance(&phi, kappa, &cfg.solver_options())?;
    let allowed_gap = cfg.rel_tolerance * kappa.norm();
    let pass = est.gap() <= allowed_gap;
    let r = TranslationReport {
        state: text.to_string(),
        kappa_re: kappa.re,
        kappa_im: kappa.im,
        lower: est.lower,
        upper: est.upper,
        gap: est.gap(),
        allowed_gap,
        pass,
        beta: est.diagnostics.beta,
        dim: cfg.store_dim,
        iterations: est.diagnostics.iterations,
        witness_ref: est.diagnostics.witness_ref.clone(),
    };
    emit(cfg, "verify-translation", &[r], true)?;
    Ok(status(pass))
}

fn verify_pythagoras(cfg: &RunConfig, kappa: &str, lambda: &str, text: &str) -> CliResult<i32> {
    let kappa = parse_complex(kappa)?;
    let lambda: f64 = parse_value("lambda", lambda)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CliError::usage(format!("lambda must be positive, got {lambda}")));
    }
    let phi = build_state(text, cfg)?;
    check_translation(kappa, cfg.theta, cfg.store_dim)?;
    let psi = translate_state(&phi, kappa);
    let opts = cfg.solver_options();
    let same = translation_distance(&phi, kappa, &opts)?;
    let internal = double_distance(&phi, Sheet::First, &phi, Sheet::Second, lambda, Some(C64::new(0.0, 0.0)), &opts)?;
    let cross = double_distance(&phi, Sheet::First, &psi, Sheet::Second, lambda, Some(kappa), &opts)?;
    let target = (kappa.norm_sqr() + lambda.powi(-2)).sqrt();
    let residual = (target - cross.lower) / target;
    let pass = residual <= cfg.rel_tolerance && cross.lower <= target + UPPER_SLACK;
    let r = PythagorasReport {
        state: text.to_string(),
        kappa_re: kappa.re,
        kappa_im: kappa.im,
        lambda,
        same_sheet_lower: same.lower,
        same_sheet_upper: same.upper,
        internal_lower: internal.lower,
        internal_upper: internal.upper,
        cross_lower: cross.lower,
        cross_upper: cross.upper,
        target,
        residual,
        pass,
        dim: cfg.store_dim,
        iterations: cross.diagnostics.iterations,
        witness_ref: cross.diagnostics.witness_ref.clone(),
    };
    emit(cfg, "verify-pythagoras", &[r], true)?;
    Ok(status(pass))
}

fn schur_scan(cfg: &RunConfig) -> CliResult<i32> {
    let mut rows = Vec::new();
    for &beta in &cfg.beta_grid {
        let c = schur_certificate(beta, cfg.store_dim)?;
        rows.push(SchurRow {
            beta,
            row_sup: c.row_sup,
            col_sup: c.col_sup,
            schur_bound: c.schur_bound,
            exact_norm: c.exact_norm,
            in_ball: c.in_ball(BALL_TOL),
        });
    }
    let pass = rows.iter().all(|r| r.in_ball);
    emit(cfg, "schur-scan", &rows, false)?;
    Ok(status(pass))
}

fn coherent_table(cfg: &RunConfig, list: &str, reference: &str) -> CliResult<i32> {
    let k0 = parse_complex(reference)?;
    let ks = parse_complex_list(list)?;
    let a = coherent_state(k0, cfg.store_dim, cfg.theta)?;
    let opts = cfg.solver_options();
    let mut rows = Vec::new();
    let mut pass = true;
    for k in ks {
        let b = coherent_state(k, cfg.store_dim, cfg.theta)?;
        let est = maximize_distance(&a, &b, &opts)?;
        let chord = (k - k0).norm();
        let exact = 2f64.sqrt() * chord;
        let rel_err = if exact > 0.0 { (exact - est.lower).abs() / exact } else { est.lower };
        pass &= rel_err <= cfg.rel_tolerance && est.lower <= exact + UPPER_SLACK;
        rows.push(CoherentRow {
            kappa_ref_re: k0.re,
            kappa_ref_im: k0.im,
            kappa_re: k.re,
            kappa_im: k.im,
            chord,
            dist_exact: exact,
            dist_lower: est.lower,
            rel_err,
            iterations: est.diagnostics.iterations,
        });
    }
    emit(cfg, "coherent-table", &rows, false)?;
    Ok(status(pass))
}

fn dfr_compare(cfg: &RunConfig, list: &str, reference: &str) -> CliResult<i32> {
    let k0 = parse_complex(reference)?;
    let ks = parse_complex_list(list)?;
    let a = coherent_state(k0, cfg.store_dim, cfg.theta)?;
    let self_len = quantum_length_squared(&a, &a)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for k in ks {
        let b = coherent_state(k, cfg.store_dim, cfg.theta)?;
        let pair = quantum_length_squared(&a, &b)?;
        let sqrt_gap = (pair - self_len).max(0.0).sqrt();
        let exact = 2f64.sqrt() * (k - k0).norm();
        let err = (sqrt_gap - exact).abs();
        let rel_err = if exact > 0.0 { err / exact } else { err };
        pass &= err <= cfg.tolerance * exact.max(1.0);
        rows.push(DfrRow {
            kappa_re: k.re,
            kappa_im: k.im,
            length_self: self_len,
            length_pair: pair,
            sqrt_gap,
            dist_exact: exact,
            rel_err,
        });
    }
    emit(cfg, "dfr-compare", &rows, false)?;
    Ok(status(pass))
}

fn solve(cfg: &RunConfig, text_a: &str, text_b: &str) -> CliResult<i32> {
    let a = build_state(text_a, cfg)?;
    let b = build_state(text_b, cfg)?;
    let opts = cfg.solver_options();
    let kappa = detect_translation(&a, &b, 1e-6)?;
    let est: DistanceEstimate = match kappa {
        Some(k) => translation_distance(&a, k, &opts)?,
        None => maximize_distance(&a, &b, &opts)?,
    };
    let rec = est.record();
    let r = SolveReport {
        state_a: text_a.to_string(),
        state_b: text_b.to_string(),
        lower: rec.lower,
        upper: rec.upper,
        gap: rec.gap,
        beta: rec.beta,
        dim: rec.dim,
        iterations: rec.iterations,
        witness_ref: rec.witness_ref,
        translation_re: kappa.map(|k| k.re),
        translation_im: kappa.map(|k| k.im),
        unbounded_suspect: est.diagnostics.unbounded_suspect,
    };
    emit(cfg, "solve", &[r], true)?;
    Ok(EXIT_PASS)
}

pub fn run(cli: &Cli) -> CliResult<i32> {
    let cfg = cli.config.resolve()?;
    log::info!("{}: {cfg:?}", cli.command.name());
    match &cli.command {
        Command::VerifyTranslation { kappa, state } => verify_translation(&cfg, kappa, state),
        Command::VerifyPythagoras { kappa, lambda, state } => verify_pythagoras(&cfg, kappa, lambda, state),
        Command::SchurScan => schur_scan(&cfg),
        Command::CoherentTable { kappa_list, kappa_ref } => coherent_table(&cfg, kappa_list, kappa_ref),
        Command::DfrCompare { kappa_list, kappa_ref } => dfr_compare(&cfg, kappa_list, kappa_ref),
        Command::Solve { state_a, state_b } => solve(&cfg, state_a, state_b),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        ConfigLayer::default().resolve().unwrap()
    }

    #[test]
    fn complex_forms() {
        let cases = [
            ("1", C64::new(1.0, 0.0)),
            ("1+0i", C64::new(1.0, 0.0)),
            ("0.5-0.25i", C64::new(0.5, -0.25)),
            ("-2.5i", C64::new(0.0, -2.5)),
            ("i", C64::new(0.0, 1.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("1e-3+2E+1i", C64::new(1e-3, 20.0)),
            (" 3 - i ", C64::new(3.0, -1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        let p = parse_complex("2@1.5707963267948966").unwrap();
        assert!((p - C64::new(0.0, 2.0)).norm() < 1e-15);
        for bad in ["", "x", "1+", "1+2", "i1", "nan"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_complex_list("1, i,").unwrap().len(), 2);
    }

    #[test]
    fn defaults_and_overrides() {
        let c = cfg();
        assert_eq!((c.theta, c.store_dim, c.pad, c.seed), (1.0, 128, 4, 0));
        assert_eq!((c.tolerance, c.rel_tolerance), (1e-6, 0.02));
        assert_eq!(c.beta_grid, default_beta_grid(128));
        let file = ConfigLayer::parse_file("# run\ntheta = 0.5\nstore_dim=64\nseed = 3 # trailing\n").unwrap();
        let mut flags = ConfigLayer::default();
        flags.set("seed", "9").unwrap();
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!((c.theta, c.store_dim, c.seed), (0.5, 64, 9));
        assert!(ConfigLayer::parse_file("nope = 1").is_err());
        assert!(ConfigLayer::parse_file("theta 1").is_err());
        let mut l = ConfigLayer::default();
        l.set("pad", "1").unwrap();
        assert!(l.resolve().is_err());
    }

    #[test]
    fn beta_grids() {
        let b1 = beta_thresholds().beta1;
        let g = parse_beta_grid("geometric:0.05:beta1:4", 128).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0], g[3]), (0.05, b1));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(parse_beta_grid("0.1, 0.05", 128).unwrap(), vec![0.1, 0.05]);
        assert!(parse_beta_grid("0.3", 128).is_err());
        assert!(parse_beta_grid("0", 128).is_err());
        assert!(parse_beta_grid("geometric:0.1:0.05:3", 128).is_err());
    }

    #[test]
    fn state_strings() {
        let c = cfg();
        assert_eq!(build_state("ground", &c).unwrap(), ground_state(128, 1.0).unwrap());
        assert_eq!(build_state("eigen:3", &c).unwrap(), eigenstate(3, 128, 1.0).unwrap());
        assert!(build_state("coherent:0.5+0.5i", &c).is_ok());
        assert_eq!(build_state("banana", &c).unwrap_err().code, EXIT_USAGE);
        assert_eq!(build_state("eigen:x", &c).unwrap_err().code, EXIT_USAGE);
        assert_eq!(build_state("eigen:500", &c).unwrap_err().code, EXIT_TRUNCATION);
        assert_eq!(build_state("mixed:/nonexistent/state.json", &c).unwrap_err().code, EXIT_IO);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        eigenstate(2, 16, 1.0).unwrap().write(&p).unwrap();
        let s = build_state(&format!("mixed:{}", p.display()), &c).unwrap();
        assert_eq!(s, eigenstate(2, 128, 1.0).unwrap());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::TruncationOverflow("x".into())).code, EXIT_TRUNCATION);
        assert_eq!(CliError::from(Error::InvalidParameter("x".into())).code, EXIT_USAGE);
        assert_eq!(CliError::from(Error::Inconsistent("x".into())).code, EXIT_FAIL);
        assert_eq!(CliError::from(io::Error::other("x")).code, EXIT_IO);
        assert_eq!(main_with_args(["moyal", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["moyal", "--help"]), EXIT_PASS);
    }
}
