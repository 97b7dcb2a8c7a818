//! Command-line front end: drift admissibility checks, CDF and
//! quantile tables, reproducible sampling with a fit summary, limit
//! classification of drift families, and call-price curves.
//!
//! Commands are driven by a key-value parameter map assembled from a
//! JSON config file (if `--config` is given) overlaid with explicit
//! flags, which always win. Unknown keys anywhere are rejected. Floats
//! are printed with 17 significant digits so output round-trips, and
//! `inf` is the literal token for +infinity in both CSV and JSON.
//!
//! Exit codes: 0 success, 1 mathematical refusal (an admissibility
//! condition fails or a monotonicity counterexample is found), 2 input
//! error, 3 numerical non-convergence or classification failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::dinverse::DInverseDistribution;
use crate::drift::{
    default_probe_grid, verify_condition_a, ConditionA, DriftFunction, Interpolation,
    TabulatedDrift,
};
use crate::error::{Error, Result};
use crate::finance::{price_curve_with_verdict, Coefficient, GbmSpec, PriceMonotonicity};
use crate::montecarlo::{ks_one_sample, ks_one_sample_crit99, EmpiricalLaw, SeededStream, DEFAULT_SEED};
use crate::numerics::log_grid;
use crate::scaling::{classify, ScaleFn, ScalingFamily};

/// Exit code for an error, per the documented mapping.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Input { .. } | Error::Domain { .. } => 2,
        Error::ConditionA { .. } | Error::NotDIncreasing { .. } => 1,
        _ => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Crossing-time toolkit for Brownian motion with monotone drift.
#[derive(Debug, Parser)]
#[command(name = "dinverse", version, about)]
pub struct Cli {
    /// JSON config file supplying the command and parameters;
    /// explicit flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output format (default csv; classify always emits JSON).
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Random seed for sampling and Monte Carlo pricing.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections (output is identical for
    /// any thread count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the admissibility condition (normalized drift
    /// non-decreasing) for a drift; exit 0 if satisfied, 1 if violated.
    CheckDrift(CheckDriftArgs),
    /// Emit the crossing-law CDF on a time grid, optional quantiles,
    /// and the defect mass.
    Table(TableArgs),
    /// Draw reproducible samples of the crossing time and summarize
    /// the fit against the analytic law.
    Sample(SampleArgs),
    /// Classify the small-scale limit of a normalized drift family;
    /// prints the report as JSON.
    Classify(ClassifyArgs),
    /// Price calls across maturities and report whether the curve is
    /// increasing; exit 1 on a counterexample.
    Price(PriceArgs),
}

/// Drift selection shared by the drift-based commands. Exactly one
/// form must be chosen (on the command line or in the config).
#[derive(Debug, Args, Default)]
pub struct DriftArgs {
    /// No drift.
    #[arg(long)]
    zero: bool,
    /// Linear drift c*t; parameter c=VALUE.
    #[arg(long, num_args = 0.., value_name = "K=V")]
    constant: Option<Vec<String>>,
    /// Power drift c*t^alpha; parameters c=VALUE alpha=VALUE.
    #[arg(long, num_args = 0.., value_name = "K=V")]
    power: Option<Vec<String>>,
    /// Exponentially corrected power drift c*t^alpha*exp(gamma/t);
    /// parameters c=VALUE alpha=VALUE gamma=VALUE.
    #[arg(long = "power-exp", num_args = 0.., value_name = "K=V")]
    power_exp: Option<Vec<String>>,
    /// Instantaneous jump to +infinity at a fixed time; parameter
    /// t0=VALUE.
    #[arg(long, num_args = 0.., value_name = "K=V")]
    explosion: Option<Vec<String>>,
    /// Tabulated drift from a CSV file with header `t,rho`.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Interpolation mode for --csv tables.
    #[arg(long, value_enum)]
    interp: Option<InterpArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterpArg {
    Linear,
    Step,
}

#[derive(Debug, Args)]
pub struct CheckDriftArgs {
    #[command(flatten)]
    drift: DriftArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    drift: DriftArgs,
    /// Level x >= 0.
    #[arg(long)]
    x: Option<f64>,
    /// Log-spaced time grid LO:HI:N.
    #[arg(long = "t-grid", value_name = "LO:HI:N")]
    t_grid: Option<String>,
    /// Comma-separated probabilities for a quantile section.
    #[arg(long, value_name = "U1,U2,...")]
    quantiles: Option<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    drift: DriftArgs,
    /// Level x >= 0.
    #[arg(long)]
    x: Option<f64>,
    /// Number of draws.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    drift: DriftArgs,
    /// Drift normalizer: `sqrt`, `power:c=..,alpha=..`,
    /// `power-exp:c=..,alpha=..,gamma=..`, or `csv:PATH` (header
    /// `u,value`, interpolated log-log).
    #[arg(long)]
    phi1: Option<String>,
    /// Level normalizer, same forms as --phi1 (default sqrt).
    #[arg(long)]
    phi2: Option<String>,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    /// Initial price.
    #[arg(long)]
    s0: Option<f64>,
    /// Volatility: a number or `csv:PATH` (header `t,value`).
    #[arg(long)]
    sigma: Option<String>,
    /// Drift coefficient: a number or `csv:PATH` (header `t,value`).
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Strike.
    #[arg(long)]
    strike: Option<f64>,
    /// Log-spaced maturity grid LO:HI:N.
    #[arg(long = "t-grid", value_name = "LO:HI:N")]
    t_grid: Option<String>,
    /// Monte Carlo draws per maturity (non-martingale specs).
    #[arg(long = "mc-n")]
    mc_n: Option<usize>,
}

/// Config-file schema: the same information as the flags. Unknown
/// fields are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

/// Recognized tolerance-override keys. Values must be positive; the
/// set of keys is fixed so typos fail loudly. Reserved for evaluation
/// paths that accept caller tolerances; the current commands run the
/// library defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub root_xtol: Option<f64>,
    #[serde(default)]
    pub quad_abs: Option<f64>,
    #[serde(default)]
    pub quad_rel: Option<f64>,
    #[serde(default)]
    pub monotone_tol: Option<f64>,
}

impl ToleranceOverrides {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("root_xtol", self.root_xtol),
            ("quad_abs", self.quad_abs),
            ("quad_rel", self.quad_rel),
            ("monotone_tol", self.monotone_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::input(format!(
                        "tolerance {name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

const DRIFT_KEYS: &[&str] = &["drift", "c", "alpha", "gamma", "t0", "path", "interp"];

fn parse_kv_tokens(form: &str, tokens: &[String], params: &mut BTreeMap<String, String>) -> Result<()> {
    for token in tokens {
        let (k, v) = token.split_once('=').ok_or_else(|| {
            Error::input(format!(
                "--{form} parameters must look like key=value, got {token:?}"
            ))
        })?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(())
}

impl DriftArgs {
    /// Overlays the selected drift form onto the parameter map,
    /// clearing any drift keys a config file may have set.
    fn fill(&self, params: &mut BTreeMap<String, String>) -> Result<()> {
        let mut chosen: Vec<(&str, &[String])> = Vec::new();
        let empty: &[String] = &[];
        if self.zero {
            chosen.push(("zero", empty));
        }
        for (name, tokens) in [
            ("constant", &self.constant),
            ("power", &self.power),
            ("power-exp", &self.power_exp),
            ("explosion", &self.explosion),
        ] {
            if let Some(t) = tokens {
                chosen.push((name, t));
            }
        }
        if self.csv.is_some() {
            chosen.push(("csv", empty));
        }
        if chosen.len() > 1 {
            return Err(Error::input(format!(
                "choose exactly one drift form, got {}",
                chosen.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(" and ")
            )));
        }
        let Some((form, tokens)) = chosen.pop() else {
            return Ok(()); // the config may supply the drift
        };
        for key in DRIFT_KEYS {
            params.remove(*key);
        }
        params.insert("drift".to_string(), form.to_string());
        parse_kv_tokens(form, tokens, params)?;
        if let Some(path) = &self.csv {
            params.insert("path".to_string(), path.display().to_string());
        }
        if let Some(interp) = self.interp {
            let mode = match interp {
                InterpArg::Linear => "linear",
                InterpArg::Step => "step",
            };
            params.insert("interp".to_string(), mode.to_string());
        }
        Ok(())
    }
}

/// Typed access to the merged parameter map with unknown-key checking.
struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    fn new(map: BTreeMap<String, String>, allowed: &[&str]) -> Result<Self> {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::input(format!(
                    "unknown parameter {key:?} (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(Params { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::input(format!("missing required parameter {key:?}")))
    }

    fn require_f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.require(key)?)
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::input(format!("parameter {key:?} must be a count, got {s:?}"))),
            None => Ok(default),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::input(format!("parameter {key:?} must be a number, got {s:?}")))
}

/// `LO:HI:N` into a log-spaced grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::input(format!(
            "grid must look like LO:HI:N, got {spec:?}"
        )));
    }
    let lo = parse_f64("grid LO", parts[0])?;
    let hi = parse_f64("grid HI", parts[1])?;
    let n = parts[2]
        .parse::<usize>()
        .map_err(|_| Error::input(format!("grid N must be a count, got {:?}", parts[2])))?;
    if n == 1 && lo == hi && lo > 0.0 && lo.is_finite() {
        return Ok(vec![lo]);
    }
    log_grid(lo, hi, n)
}

fn parse_float_list(key: &str, spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|tok| parse_f64(key, tok.trim()))
        .collect()
}

/// The drift forms nameable from the command line or config.
enum DriftSpec {
    Zero,
    Constant { c: f64 },
    Power { c: f64, alpha: f64 },
    PowerExp { c: f64, alpha: f64, gamma: f64 },
    Explosion { t0: f64 },
    Csv { table: TabulatedDrift },
}

fn interp_from(params: &Params) -> Result<Interpolation> {
    match params.get("interp") {
        None | Some("linear") => Ok(Interpolation::Linear),
        Some("step") => Ok(Interpolation::Step),
        Some(other) => Err(Error::input(format!(
            "interp must be linear or step, got {other:?}"
        ))),
    }
}

fn drift_spec_from(params: &Params) -> Result<DriftSpec> {
    let form = params.require("drift")?;
    let reject = |keys: &[&str]| -> Result<()> {
        for key in keys {
            if params.get(key).is_some() {
                return Err(Error::input(format!(
                    "parameter {key:?} does not apply to the {form} drift"
                )));
            }
        }
        Ok(())
    };
    match form {
        "zero" => {
            reject(&["c", "alpha", "gamma", "t0", "path", "interp"])?;
            Ok(DriftSpec::Zero)
        }
        "constant" => {
            reject(&["alpha", "gamma", "t0", "path", "interp"])?;
            Ok(DriftSpec::Constant {
                c: params.require_f64("c")?,
            })
        }
        "power" => {
            reject(&["gamma", "t0", "path", "interp"])?;
            Ok(DriftSpec::Power {
                c: params.require_f64("c")?,
                alpha: params.require_f64("alpha")?,
            })
        }
        "power-exp" => {
            reject(&["t0", "path", "interp"])?;
            Ok(DriftSpec::PowerExp {
                c: params.require_f64("c")?,
                alpha: params.require_f64("alpha")?,
                gamma: params.require_f64("gamma")?,
            })
        }
        "explosion" => {
            reject(&["c", "alpha", "gamma", "path", "interp"])?;
            let t0 = params.require_f64("t0")?;
            if !(t0 > 0.0) || !t0.is_finite() {
                return Err(Error::input(format!(
                    "explosion time t0 must be positive and finite, got {t0}"
                )));
            }
            Ok(DriftSpec::Explosion { t0 })
        }
        "csv" => {
            reject(&["c", "alpha", "gamma", "t0"])?;
            let path = params.require("path")?;
            let table = TabulatedDrift::from_csv_path(Path::new(path), interp_from(params)?)?;
            Ok(DriftSpec::Csv { table })
        }
        other => Err(Error::input(format!(
            "unknown drift form {other:?} (expected zero, constant, power, power-exp, explosion, or csv)"
        ))),
    }
}

impl DriftSpec {
    fn drift_function(&self) -> Result<DriftFunction> {
        match self {
            DriftSpec::Zero => Ok(DriftFunction::zero()),
            DriftSpec::Constant { c } => DriftFunction::constant(*c),
            DriftSpec::Power { c, alpha } => DriftFunction::power(*c, *alpha),
            DriftSpec::PowerExp { c, alpha, gamma } => {
                DriftFunction::power_exp(*c, *alpha, *gamma)
            }
            DriftSpec::Explosion { t0 } => {
                let t0 = *t0;
                Ok(DriftFunction::custom_with_log(
                    move |t| if t < t0 { 0.0 } else { f64::INFINITY },
                    move |t| {
                        if t < t0 {
                            f64::NEG_INFINITY
                        } else {
                            f64::INFINITY
                        }
                    },
                ))
            }
            DriftSpec::Csv { table } => Ok(DriftFunction::Tabulated(table.clone())),
        }
    }

    fn distribution(&self, x: f64) -> Result<DInverseDistribution> {
        match self {
            DriftSpec::Zero => DInverseDistribution::zero_drift(x),
            DriftSpec::Constant { c } => DInverseDistribution::constant_drift(*c, x),
            DriftSpec::Power { c, alpha } => DInverseDistribution::power_drift(*c, *alpha, x),
            DriftSpec::Explosion { t0 } => DInverseDistribution::explosion(*t0, x),
            DriftSpec::PowerExp { .. } | DriftSpec::Csv { .. } => {
                DInverseDistribution::from_drift(
                    self.drift_function()?,
                    x,
                    &default_probe_grid(),
                )
            }
        }
    }
}

/// Scale-function microformat: `sqrt`, `power:c=..,alpha=..`,
/// `power-exp:c=..,alpha=..,gamma=..`, or `csv:PATH`.
fn scale_fn_from(which: &str, spec: &str) -> Result<ScaleFn> {
    if spec == "sqrt" {
        return Ok(ScaleFn::sqrt());
    }
    let (form, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::input(format!("{which} must be sqrt, FORM:k=v,... or csv:PATH, got {spec:?}")))?;
    if form == "csv" {
        let knots = read_pair_csv(Path::new(rest), "u", "value")?;
        return ScaleFn::tabulated(knots);
    }
    let mut kv = BTreeMap::new();
    for token in rest.split(',') {
        let (k, v) = token.split_once('=').ok_or_else(|| {
            Error::input(format!("{which} parameters must look like key=value, got {token:?}"))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str| -> Result<f64> {
        let s = kv
            .remove(key)
            .ok_or_else(|| Error::input(format!("{which} {form} needs {key}=VALUE")))?;
        parse_f64(key, &s)
    };
    let result = match form {
        "power" => ScaleFn::power(take("c")?, take("alpha")?),
        "power-exp" => ScaleFn::power_exp(take("c")?, take("alpha")?, take("gamma")?),
        other => {
            return Err(Error::input(format!(
                "unknown {which} form {other:?} (expected sqrt, power, power-exp, or csv)"
            )))
        }
    }?;
    if let Some(key) = kv.keys().next() {
        return Err(Error::input(format!(
            "{which} {form} does not take parameter {key:?}"
        )));
    }
    Ok(result)
}

/// Two-column CSV with the given header names.
fn read_pair_csv(path: &Path, first: &str, second: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::input(format!("bad CSV header in {}: {e}", path.display())))?;
    if headers.len() != 2 || &headers[0] != first || &headers[1] != second {
        return Err(Error::input(format!(
            "{} must have header {first},{second}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::input(format!("bad CSV row {} in {}: {e}", i + 2, path.display())))?;
        if record.len() != 2 {
            return Err(Error::input(format!(
                "CSV row {} in {} must have two fields",
                i + 2,
                path.display()
            )));
        }
        let a = parse_f64(first, &record[0])?;
        let b = parse_f64(second, &record[1])?;
        rows.push((a, b));
    }
    Ok(rows)
}

fn coefficient_from(which: &str, spec: &str) -> Result<Coefficient> {
    if let Some(rest) = spec.strip_prefix("csv:") {
        return Coefficient::tabulated(read_pair_csv(Path::new(rest), "t", "value")?);
    }
    Coefficient::constant(parse_f64(which, spec)?)
}

/// 17-significant-digit float rendering; `inf` for +infinity.
fn fmt_float(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn json_float(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        serde_json::Value::String("inf".to_string())
    } else {
        serde_json::Number::from_f64(v)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// One command's rendered output plus its exit code.
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

/// Runs the parsed command line end to end, writing the output to
/// `--out` or stdout, and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(tol) = &config.tolerances {
        tol.validate()?;
    }
    let format = match cli.format {
        Some(f) => f,
        None => match config.format.as_deref() {
            Some("csv") | None => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(Error::input(format!(
                    "format must be csv or json, got {other:?}"
                )))
            }
        },
    };
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let threads = cli.threads.or(config.threads);
    let out_path = cli.out.or(config.out);

    let mut params = config.parameters;
    let command_name = match &cli.command {
        Some(cmd) => {
            cmd.fill(&mut params)?;
            cmd.name()
        }
        None => match config.command.as_deref() {
            Some(name) => canonical_command(name)?,
            None => {
                return Err(Error::input(
                    "no command given (on the command line or in the config)".to_string(),
                ))
            }
        },
    };

    let run_inner = || dispatch(command_name, params, format, seed);
    let outcome = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::input(format!("cannot build thread pool: {e}")))?;
            pool.install(run_inner)?
        }
        None => run_inner()?,
    };

    match out_path {
        Some(path) => std::fs::write(&path, outcome.output.as_bytes())
            .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(outcome.output.as_bytes())
                .map_err(|e| Error::input(format!("cannot write output: {e}")))?;
        }
    }
    Ok(outcome.exit_code)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::input(format!("invalid config {}: {e}", path.display())))
}

fn canonical_command(name: &str) -> Result<&'static str> {
    match name {
        "check-drift" => Ok("check-drift"),
        "table" => Ok("table"),
        "sample" => Ok("sample"),
        "classify" => Ok("classify"),
        "price" => Ok("price"),
        other => Err(Error::input(format!("unknown command {other:?}"))),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckDrift(_) => "check-drift",
            Command::Table(_) => "table",
            Command::Sample(_) => "sample",
            Command::Classify(_) => "classify",
            Command::Price(_) => "price",
        }
    }

    fn fill(&self, params: &mut BTreeMap<String, String>) -> Result<()> {
        match self {
            Command::CheckDrift(args) => args.drift.fill(params),
            Command::Table(args) => {
                args.drift.fill(params)?;
                fill_f64(params, "x", args.x);
                fill_string(params, "t-grid", &args.t_grid);
                fill_string(params, "quantiles", &args.quantiles);
                Ok(())
            }
            Command::Sample(args) => {
                args.drift.fill(params)?;
                fill_f64(params, "x", args.x);
                if let Some(n) = args.n {
                    params.insert("n".to_string(), n.to_string());
                }
                Ok(())
            }
            Command::Classify(args) => {
                args.drift.fill(params)?;
                fill_string(params, "phi1", &args.phi1);
                fill_string(params, "phi2", &args.phi2);
                Ok(())
            }
            Command::Price(args) => {
                fill_f64(params, "s0", args.s0);
                fill_string(params, "sigma", &args.sigma);
                fill_string(params, "mu", &args.mu);
                fill_f64(params, "strike", args.strike);
                fill_string(params, "t-grid", &args.t_grid);
                if let Some(n) = args.mc_n {
                    params.insert("mc-n".to_string(), n.to_string());
                }
                Ok(())
            }
        }
    }
}

fn fill_f64(params: &mut BTreeMap<String, String>, key: &str, value: Option<f64>) {
    if let Some(v) = value {
        params.insert(key.to_string(), format!("{v}"));
    }
}

fn fill_string(params: &mut BTreeMap<String, String>, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        params.insert(key.to_string(), v.clone());
    }
}

fn dispatch(
    command: &str,
    params: BTreeMap<String, String>,
    format: OutputFormat,
    seed: u64,
) -> Result<Outcome> {
    match command {
        "check-drift" => cmd_check_drift(Params::new(params, DRIFT_KEYS)?, format),
        "table" => {
            let allowed: Vec<&str> = DRIFT_KEYS
                .iter()
                .chain(["x", "t-grid", "quantiles"].iter())
                .copied()
                .collect();
            cmd_table(Params::new(params, &allowed)?, format)
        }
        "sample" => {
            let allowed: Vec<&str> = DRIFT_KEYS.iter().chain(["x", "n"].iter()).copied().collect();
            cmd_sample(Params::new(params, &allowed)?, format, seed)
        }
        "classify" => {
            let allowed: Vec<&str> = DRIFT_KEYS
                .iter()
                .chain(["phi1", "phi2"].iter())
                .copied()
                .collect();
            cmd_classify(Params::new(params, &allowed)?)
        }
        "price" => cmd_price(
            Params::new(params, &["s0", "sigma", "mu", "strike", "t-grid", "mc-n"])?,
            format,
            seed,
        ),
        other => Err(Error::input(format!("unknown command {other:?}"))),
    }
}

fn cmd_check_drift(params: Params, format: OutputFormat) -> Result<Outcome> {
    let spec = drift_spec_from(&params)?;
    let drift = spec.drift_function()?;
    let report = verify_condition_a(&drift, &default_probe_grid())?;
    let outcome = match report {
        ConditionA::Satisfied => match format {
            OutputFormat::Csv => Outcome {
                output: "result\nsatisfied\n".to_string(),
                exit_code: 0,
            },
            OutputFormat::Json => Outcome {
                output: format!("{}\n", serde_json::json!({ "result": "satisfied" })),
                exit_code: 0,
            },
        },
        ConditionA::Violated {
            t_lo,
            t_hi,
            ratio_lo,
            ratio_hi,
        } => match format {
            OutputFormat::Csv => Outcome {
                output: format!(
                    "result,t_lo,t_hi,ratio_lo,ratio_hi\nviolated,{},{},{},{}\n",
                    fmt_float(t_lo),
                    fmt_float(t_hi),
                    fmt_float(ratio_lo),
                    fmt_float(ratio_hi)
                ),
                exit_code: 1,
            },
            OutputFormat::Json => Outcome {
                output: format!(
                    "{}\n",
                    serde_json::json!({
                        "result": "violated",
                        "t_lo": json_float(t_lo),
                        "t_hi": json_float(t_hi),
                        "ratio_lo": json_float(ratio_lo),
                        "ratio_hi": json_float(ratio_hi),
                    })
                ),
                exit_code: 1,
            },
        },
    };
    Ok(outcome)
}

fn cmd_table(params: Params, format: OutputFormat) -> Result<Outcome> {
    let spec = drift_spec_from(&params)?;
    let x = params.require_f64("x")?;
    let grid = parse_grid(params.get("t-grid").unwrap_or("1e-2:1e2:25"))?;
    let quantile_us = match params.get("quantiles") {
        Some(s) => parse_float_list("quantiles", s)?,
        None => Vec::new(),
    };
    let dist = spec.distribution(x)?;
    let rows: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| Ok((t, dist.cdf(t)?)))
        .collect::<Result<_>>()?;
    let quantiles: Vec<(f64, f64)> = quantile_us
        .iter()
        .map(|&u| Ok((u, dist.quantile(u)?)))
        .collect::<Result<_>>()?;
    let defect = dist.defect_mass();

    let output = match format {
        OutputFormat::Csv => {
            let mut s = String::from("t,cdf\n");
            for (t, c) in &rows {
                s.push_str(&format!("{},{}\n", fmt_float(*t), fmt_float(*c)));
            }
            if !quantiles.is_empty() {
                s.push_str("\nu,quantile\n");
                for (u, q) in &quantiles {
                    s.push_str(&format!("{},{}\n", fmt_float(*u), fmt_float(*q)));
                }
            }
            s.push_str(&format!("\ndefect_mass\n{}\n", fmt_float(defect)));
            s
        }
        OutputFormat::Json => {
            let table: Vec<serde_json::Value> = rows
                .iter()
                .map(|(t, c)| serde_json::json!({ "t": json_float(*t), "cdf": json_float(*c) }))
                .collect();
            let qs: Vec<serde_json::Value> = quantiles
                .iter()
                .map(|(u, q)| serde_json::json!({ "u": json_float(*u), "quantile": json_float(*q) }))
                .collect();
            format!(
                "{}\n",
                serde_json::json!({
                    "x": json_float(x),
                    "defect_mass": json_float(defect),
                    "table": table,
                    "quantiles": qs,
                })
            )
        }
    };
    Ok(Outcome {
        output,
        exit_code: 0,
    })
}

fn cmd_sample(params: Params, format: OutputFormat, seed: u64) -> Result<Outcome> {
    use rayon::prelude::*;

    let spec = drift_spec_from(&params)?;
    let x = params.require_f64("x")?;
    let n = params.usize_or("n", 1000)?;
    if n == 0 {
        return Err(Error::input("n must be positive".to_string()));
    }
    let dist = spec.distribution(x)?;
    // One substream per draw index: the result is independent of the
    // parallel schedule, so any thread count emits identical bytes.
    let draws: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededStream::new(seed, i as u64);
            dist.sample(&mut rng)
        })
        .collect::<Result<_>>()?;

    let emp = EmpiricalLaw::from_samples(draws.iter().copied())?;
    let defect = dist.defect_mass();
    let finite_n = emp.finite_samples().len();
    let (ks, crit) = if finite_n > 0 && defect < 1.0 {
        let stat = ks_one_sample(&emp, |t| {
            (dist.cdf_extended(t) / (1.0 - defect)).min(1.0)
        })?;
        (stat, ks_one_sample_crit99(finite_n))
    } else {
        (f64::NAN, f64::NAN)
    };
    let ks_pass = ks < crit;

    let output = match format {
        OutputFormat::Csv => {
            let mut s = String::from("sample\n");
            for d in &draws {
                s.push_str(&fmt_float(*d));
                s.push('\n');
            }
            s.push_str("\nstatistic,value\n");
            s.push_str(&format!("n,{n}\n"));
            s.push_str(&format!("defect_fraction,{}\n", fmt_float(emp.defect_fraction())));
            s.push_str(&format!("defect_mass,{}\n", fmt_float(defect)));
            s.push_str(&format!("ks,{}\n", fmt_float(ks)));
            s.push_str(&format!("ks_crit99,{}\n", fmt_float(crit)));
            s.push_str(&format!("ks_pass,{ks_pass}\n"));
            s
        }
        OutputFormat::Json => {
            let samples: Vec<serde_json::Value> = draws.iter().map(|&d| json_float(d)).collect();
            format!(
                "{}\n",
                serde_json::json!({
                    "samples": samples,
                    "summary": {
                        "n": n,
                        "defect_fraction": json_float(emp.defect_fraction()),
                        "defect_mass": json_float(defect),
                        "ks": json_float(ks),
                        "ks_crit99": json_float(crit),
                        "ks_pass": ks_pass,
                    },
                })
            )
        }
    };
    Ok(Outcome {
        output,
        exit_code: 0,
    })
}

fn cmd_classify(params: Params) -> Result<Outcome> {
    let spec = drift_spec_from(&params)?;
    let phi1 = scale_fn_from("phi1", params.require("phi1")?)?;
    let phi2 = scale_fn_from("phi2", params.get("phi2").unwrap_or("sqrt"))?;
    let family = ScalingFamily::new(spec.drift_function()?, phi1, phi2)?;
    let report = classify(&family)?;
    let json = serde_json::to_string(&report)
        .map_err(|e| Error::input(format!("cannot serialize report: {e}")))?;
    Ok(Outcome {
        output: format!("{json}\n"),
        exit_code: 0,
    })
}

fn cmd_price(params: Params, format: OutputFormat, seed: u64) -> Result<Outcome> {
    let s0 = params.require_f64("s0")?;
    let sigma = coefficient_from("sigma", params.require("sigma")?)?;
    let mu = coefficient_from("mu", params.require("mu")?)?;
    let strike = params.require_f64("strike")?;
    let grid = parse_grid(params.get("t-grid").unwrap_or("1e-2:1e2:25"))?;
    let mc_n = params.usize_or("mc-n", 100_000)?;
    let spec = GbmSpec::new(s0, sigma, mu)?;
    let (points, verdict) = price_curve_with_verdict(&spec, strike, &grid, mc_n, seed)?;
    let exit_code = match verdict {
        PriceMonotonicity::Increasing => 0,
        PriceMonotonicity::CounterExample { .. } => 1,
    };

    let output = match format {
        OutputFormat::Csv => {
            let mut s = String::from("t,price,std_error\n");
            for p in &points {
                s.push_str(&format!(
                    "{},{},{}\n",
                    fmt_float(p.quote.maturity),
                    fmt_float(p.quote.price),
                    fmt_float(p.std_error)
                ));
            }
            match verdict {
                PriceMonotonicity::Increasing => s.push_str("\nverdict\nincreasing\n"),
                PriceMonotonicity::CounterExample {
                    t_lo,
                    t_hi,
                    price_lo,
                    price_hi,
                } => s.push_str(&format!(
                    "\nverdict,t_lo,t_hi,price_lo,price_hi\ncounterexample,{},{},{},{}\n",
                    fmt_float(t_lo),
                    fmt_float(t_hi),
                    fmt_float(price_lo),
                    fmt_float(price_hi)
                )),
            }
            s
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "t": json_float(p.quote.maturity),
                        "price": json_float(p.quote.price),
                        "std_error": json_float(p.std_error),
                    })
                })
                .collect();
            let verdict_json = serde_json::to_value(verdict)
                .map_err(|e| Error::input(format!("cannot serialize verdict: {e}")))?;
            format!(
                "{}\n",
                serde_json::json!({ "points": rows, "monotonicity": verdict_json })
            )
        }
    };
    Ok(Outcome { output, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_from(pairs: &[(&str, &str)], allowed: &[&str]) -> Params {
        let map = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Params::new(map, allowed).unwrap()
    }

    #[test]
    fn float_formatting_round_trips() {
        let v = 0.8413447460685429f64;
        let s = fmt_float(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(json_float(f64::INFINITY), serde_json::json!("inf"));
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("1:100:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 1.0).abs() <= 1e-15);
        assert!((g[1] - 10.0).abs() <= 1e-12);
        assert!((g[2] - 100.0).abs() <= 1e-12);
        assert!(parse_grid("1:100").is_err());
        assert!(parse_grid("a:b:3").is_err());
    }

    #[test]
    fn unknown_parameters_are_rejected() {
        let map: BTreeMap<String, String> =
            [("drift".to_string(), "zero".to_string()), ("bogus".to_string(), "1".to_string())]
                .into_iter()
                .collect();
        assert!(Params::new(map, DRIFT_KEYS).is_err());
    }

    #[test]
    fn drift_spec_requires_matching_parameters() {
        let p = params_from(&[("drift", "power"), ("c", "1"), ("alpha", "2")], DRIFT_KEYS);
        assert!(matches!(
            drift_spec_from(&p),
            Ok(DriftSpec::Power { c, alpha }) if c == 1.0 && alpha == 2.0
        ));
        // Missing parameter.
        let p = params_from(&[("drift", "power"), ("c", "1")], DRIFT_KEYS);
        assert!(drift_spec_from(&p).is_err());
        // Parameter from another form.
        let p = params_from(&[("drift", "zero"), ("c", "1")], DRIFT_KEYS);
        assert!(drift_spec_from(&p).is_err());
        // Unknown form.
        let p = params_from(&[("drift", "cubic")], DRIFT_KEYS);
        assert!(drift_spec_from(&p).is_err());
    }

    #[test]
    fn scale_fn_microformat() {
        assert!(scale_fn_from("phi1", "sqrt").is_ok());
        let sf = scale_fn_from("phi1", "power:c=3,alpha=-1.5").unwrap();
        assert!((sf.eval(4.0) - 3.0 * 4.0f64.powf(-1.5)).abs() <= 1e-15);
        assert!(scale_fn_from("phi1", "power:c=3").is_err());
        assert!(scale_fn_from("phi1", "power:c=3,alpha=1,extra=2").is_err());
        assert!(scale_fn_from("phi1", "wavelet:a=1").is_err());
    }

    #[test]
    fn drift_flags_override_config_drift() {
        let mut params: BTreeMap<String, String> = [
            ("drift".to_string(), "power".to_string()),
            ("c".to_string(), "1".to_string()),
            ("alpha".to_string(), "2".to_string()),
        ]
        .into_iter()
        .collect();
        let args = DriftArgs {
            zero: true,
            ..DriftArgs::default()
        };
        args.fill(&mut params).unwrap();
        assert_eq!(params.get("drift").map(|s| s.as_str()), Some("zero"));
        assert!(!params.contains_key("c"));
        assert!(!params.contains_key("alpha"));
    }

    #[test]
    fn conflicting_drift_flags_are_rejected() {
        let args = DriftArgs {
            zero: true,
            power: Some(vec!["c=1".to_string(), "alpha=2".to_string()]),
            ..DriftArgs::default()
        };
        let mut params = BTreeMap::new();
        assert!(args.fill(&mut params).is_err());
    }

    #[test]
    fn table_emits_cdf_rows_and_defect() {
        let p = params_from(
            &[("drift", "zero"), ("x", "0"), ("t-grid", "0.5:2:3")],
            &["drift", "c", "alpha", "gamma", "t0", "path", "interp", "x", "t-grid", "quantiles"],
        );
        let out = cmd_table(p, OutputFormat::Csv).unwrap();
        assert_eq!(out.exit_code, 0);
        let lines: Vec<&str> = out.output.lines().collect();
        assert_eq!(lines[0], "t,cdf");
        for row in &lines[1..4] {
            assert!(row.ends_with(",5.0000000000000000e-1"), "{row}");
        }
        assert!(out.output.contains("defect_mass\n5.0000000000000000e-1\n"));
    }

    #[test]
    fn sample_is_deterministic_and_summarized() {
        let allowed: Vec<&str> = DRIFT_KEYS.iter().chain(["x", "n"].iter()).copied().collect();
        let p1 = params_from(&[("drift", "constant"), ("c", "1"), ("x", "1"), ("n", "500")], &allowed);
        let p2 = params_from(&[("drift", "constant"), ("c", "1"), ("x", "1"), ("n", "500")], &allowed);
        let a = cmd_sample(p1, OutputFormat::Csv, 7).unwrap();
        let b = cmd_sample(p2, OutputFormat::Csv, 7).unwrap();
        assert_eq!(a.output, b.output);
        assert!(a.output.contains("ks_pass,true"), "{}", a.output);
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code_for(&Error::input("x")), 2);
        assert_eq!(exit_code_for(&Error::domain("x")), 2);
        assert_eq!(
            exit_code_for(&Error::ConditionA {
                t_lo: 1.0,
                t_hi: 2.0,
                ratio_lo: 1.0,
                ratio_hi: 0.5
            }),
            1
        );
        assert_eq!(
            exit_code_for(&Error::NotDIncreasing {
                what: "x".to_string()
            }),
            1
        );
        assert_eq!(exit_code_for(&Error::non_convergence("x")), 3);
        assert_eq!(
            exit_code_for(&Error::Classification {
                what: "x".to_string(),
                profile: vec![]
            }),
            3
        );
    }
}
