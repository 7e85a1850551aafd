//! The `casimir` command-line front end.
//!
//! Lengths are in nm and wavevectors in nm^-1. Every subcommand accepts
//! `--json`; text and JSON modes print the same numbers (shortest round-trip
//! representation). Exit codes: 0 success, 1 numerical or I/O failure,
//! 2 usage error.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::constants::{HBAR_C, NM};
use crate::correction::{
    self, classify_regime, scaling_delta, CorrectionError, CorrectionResult, ModelChoice, Regime,
    DEFAULT_THRESHOLD, PLASMON_ROUGH_COMPOSED, PLASMON_ROUGH_QUOTED,
};
use crate::lifshitz::{self, Geometry, LifshitzError};
use crate::mirror::{Mirror, MirrorError};
use crate::oracle::{self, OracleError, GOLDEN_K_MAX, GOLDEN_N};
use crate::response::{self, ResponseError, ResponseModel, ResponseProfile};
use crate::spectra::{self, GaussianSpectrum, RoughnessSpectrum, SpectrumError};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CASIMIR_THREADS";

pub const RHO_HEADER: &str = "k_nm_inv,q,rho,model";
pub const ALPHA_HEADER: &str = "L_nm,alpha_nm";
pub const SWEEP_HEADER: &str = "axis_value,delta,model,regime";

const DEFAULT_TOL: &str = "1e-8";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Mirror(_) => 2,
            _ => 1,
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "casimir",
    version,
    about = "Roughness correction to the Casimir force between plasma-model plates beyond the PFA"
)]
pub struct Cli {
    /// Print JSON instead of text
    #[arg(long, global = true)]
    pub json: bool,
    /// File of `key=value` lines supplying defaults for the subcommand's flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plane-plane energy, its curvature, and optionally the plane-sphere force
    Energy(EnergyArgs),
    /// Deviation factor rho(k) on a log-spaced k grid (CSV)
    Rho(RhoArgs),
    /// High-k slope alpha on a log-spaced L grid (CSV)
    Alpha(AlphaArgs),
    /// Relative roughness correction Delta for one configuration
    Delta(DeltaArgs),
    /// Delta over a grid of L, k or l_C, written as CSV
    Sweep(SweepArgs),
    /// Regenerate the golden-value fixture from the brute-force oracles
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, clap::Args)]
pub struct EnergyArgs {
    /// Plate separation, nm
    #[arg(long = "L", allow_negative_numbers = true)]
    pub separation: f64,
    /// Plasma wavelength, nm (0 for perfect mirrors)
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: f64,
    /// Sphere radius, nm
    #[arg(long = "R", allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// Roughness correlation length, nm, for the sphere validity check
    #[arg(long = "lc", allow_negative_numbers = true)]
    pub correlation_length: Option<f64>,
    /// Relative tolerance
    #[arg(long, default_value = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, clap::Args)]
pub struct RhoArgs {
    #[arg(long = "L", allow_negative_numbers = true)]
    pub separation: f64,
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: f64,
    /// nm^-1
    #[arg(long = "k-min", allow_negative_numbers = true)]
    pub k_min: f64,
    /// nm^-1
    #[arg(long = "k-max", allow_negative_numbers = true)]
    pub k_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// pfa, high_k, perfect_reflector or stitched
    #[arg(long, default_value = "stitched")]
    pub model: ResponseModel,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, clap::Args)]
pub struct AlphaArgs {
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: f64,
    /// nm
    #[arg(long = "L-min", allow_negative_numbers = true)]
    pub l_min: f64,
    /// nm
    #[arg(long = "L-max", allow_negative_numbers = true)]
    pub l_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, clap::Args)]
pub struct SpectrumArgs {
    /// `gaussian:a=<nm>,lc=<nm>`
    #[arg(long, conflicts_with = "spectrum_file")]
    pub spectrum: Option<String>,
    /// CSV with header `k_nm_inv,sigma_nm4`
    #[arg(long = "spectrum-file")]
    pub spectrum_file: Option<PathBuf>,
}

impl SpectrumArgs {
    fn load(&self) -> Result<RoughnessSpectrum, CliError> {
        match (&self.spectrum, &self.spectrum_file) {
            (Some(s), None) => s.parse().map_err(|e: SpectrumError| usage(format!("--spectrum: {e}"))),
            (None, Some(path)) => {
                spectra::load_spectrum(path).map_err(|e| usage(format!("{}: {e}", path.display())))
            }
            _ => Err(usage("one of --spectrum or --spectrum-file is required")),
        }
    }

    fn describe(&self) -> String {
        match (&self.spectrum, &self.spectrum_file) {
            (Some(s), _) => s.clone(),
            (_, Some(p)) => format!("file:{}", p.display()),
            _ => String::new(),
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct DeltaArgs {
    #[arg(long = "L", allow_negative_numbers = true)]
    pub separation: f64,
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: f64,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    /// auto, pfa, high_k, perfect_reflector or stitched
    #[arg(long, default_value = "auto")]
    pub model: ModelChoice,
    /// Ratio realising "much smaller than" in the regime labels
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// separation, nm
    #[value(name = "L")]
    Separation,
    /// roughness wavevector, nm^-1 (ring spectrum of the given variance)
    #[value(name = "k")]
    Wavevector,
    /// correlation length of a Gaussian spectrum, nm
    #[value(name = "lc")]
    CorrelationLength,
}

impl Axis {
    fn name(&self) -> &'static str {
        match self {
            Axis::Separation => "L",
            Axis::Wavevector => "k",
            Axis::CorrelationLength => "lc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub axis: Axis,
    #[arg(long, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub spacing: Spacing,
    /// Separation, nm; required unless sweeping L
    #[arg(long = "L", allow_negative_numbers = true)]
    pub separation: Option<f64>,
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: f64,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long, default_value = "auto")]
    pub model: ModelChoice,
    #[arg(long, default_value = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV destination
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = GOLDEN_N)]
    pub n: usize,
    #[arg(long = "k-max", default_value_t = GOLDEN_K_MAX)]
    pub k_max: f64,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn config_path(args: &[OsString]) -> Option<(usize, PathBuf)> {
    let mut it = args.iter().enumerate().skip(1);
    while let Some((i, a)) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(|(_, v)| (i, PathBuf::from(v)));
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some((i, PathBuf::from(v)));
        }
    }
    None
}

fn parse_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        pairs.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn truthy(v: &str) -> bool {
    matches!(v, "1" | "true" | "yes" | "on")
}

/// Splices `--key=value` tokens from the `--config` file into `args` for every
/// flag of the chosen subcommand that is not given explicitly.
pub fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some((config_index, path)) = config_path(&args) else {
        return Ok(args);
    };
    let pairs = parse_config(&path)?;
    let command = Cli::command();

    let value_index = |i: usize| args[i].to_string_lossy() == "--config" && i == config_index;
    let mut sub_index = None;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if value_index(i) {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            sub_index = Some(i);
            break;
        }
        i += 1;
    }

    let known: HashSet<String> = command
        .get_subcommands()
        .flat_map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)))
        .chain(["json".to_string()])
        .collect();
    for (k, _) in &pairs {
        if !known.contains(k) {
            return Err(usage(format!("{}: unknown key '{k}'", path.display())));
        }
    }

    let explicit: HashSet<String> = args
        .iter()
        .filter_map(|a| {
            let s = a.to_string_lossy();
            s.strip_prefix("--").map(|r| r.split('=').next().unwrap_or("").to_string())
        })
        .collect();
    let mut injected: Vec<OsString> = Vec::new();
    if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "json") {
        if truthy(v) && !explicit.contains("json") {
            injected.push("--json".into());
        }
    }
    let Some(sub_index) = sub_index else {
        return Ok(args);
    };
    let name = args[sub_index].to_string_lossy().to_string();
    if let Some(sub) = command.find_subcommand(&name) {
        for (k, v) in &pairs {
            if explicit.contains(k) {
                continue;
            }
            if let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(k.as_str())) {
                if arg.get_action().takes_values() {
                    injected.push(format!("--{k}={v}").into());
                } else if truthy(v) {
                    injected.push(format!("--{k}").into());
                }
            }
        }
    }
    let tail = args.split_off(sub_index + 1);
    args.extend(injected);
    args.extend(tail);
    Ok(args)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| usage(e.to_string()))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

fn mirror(lambda_p: f64) -> Result<Mirror, CliError> {
    if !(lambda_p.is_finite() && lambda_p >= 0.0) {
        return Err(usage(format!("--lambda-p must be >= 0, got {lambda_p}")));
    }
    Ok(Mirror::from_lambda_p(lambda_p)?)
}

fn grid(min: f64, max: f64, points: usize, spacing: Spacing, what: &str) -> Result<Vec<f64>, CliError> {
    positive(&format!("{what} minimum"), min)?;
    positive(&format!("{what} maximum"), max)?;
    if min >= max {
        return Err(usage(format!("empty {what} range [{min}, {max}]")));
    }
    if points < 2 {
        return Err(usage(format!("--points must be at least 2, got {points}")));
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let t = i as f64 / last;
            match (i, spacing) {
                (0, _) => min,
                (i, _) if i == points - 1 => max,
                (_, Spacing::Log) => min * (max / min).powf(t),
                (_, Spacing::Linear) => min + (max - min) * t,
            }
        })
        .collect())
}

fn fmt(v: f64) -> String {
    Value::from(v).to_string()
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Renders a JSON object as `key = value` lines; warnings go last.
fn render_text(value: &Value, out: &mut dyn Write) -> io::Result<()> {
    let Value::Object(map) = value else {
        return writeln!(out, "{value}");
    };
    for (k, v) in map {
        match v {
            Value::Array(_) => {}
            Value::Null => writeln!(out, "{k} = none")?,
            Value::String(s) => writeln!(out, "{k} = {s}")?,
            other => writeln!(out, "{k} = {other}")?,
        }
    }
    for (_, v) in map {
        if let Value::Array(items) = v {
            for item in items {
                match item {
                    Value::String(s) => writeln!(out, "warning: {s}")?,
                    other => writeln!(out, "warning: {other}")?,
                }
            }
        }
    }
    Ok(())
}

fn emit<T: Serialize>(report: &T, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let value = serde_json::to_value(report)?;
    let written = if json_mode {
        serde_json::to_writer_pretty(&mut *out, &value)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        render_text(&value, out)
    };
    written.map_err(io_err(Path::new("<stdout>")))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Energy(a) => cmd_energy(a, cli.json, out),
        Command::Rho(a) => cmd_rho(a, cli.json, out),
        Command::Alpha(a) => cmd_alpha(a, cli.json, out),
        Command::Delta(a) => cmd_delta(a, cli.json, out),
        Command::Sweep(a) => cmd_sweep(a, cli.json, out),
        Command::Oracle(a) => cmd_oracle(a, cli.json, out),
    }
}

#[derive(Debug, Serialize)]
pub struct EnergyReport {
    pub separation_nm: f64,
    pub lambda_p_nm: f64,
    pub k_p: Option<f64>,
    pub reduced_energy: f64,
    pub reduced_energy_error: f64,
    pub energy_per_area_j_m2: f64,
    /// `e / (-pi^2 / 720)`
    pub reduction_factor: f64,
    pub energy_slope_j_m3: f64,
    pub energy_curvature_j_m4: f64,
    pub g0: f64,
    pub curvature_ratio: f64,
    pub radius_nm: Option<f64>,
    pub force_n: Option<f64>,
    pub warnings: Vec<String>,
}

fn cmd_energy(a: &EnergyArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let l = positive("--L", a.separation)?;
    let m = mirror(a.lambda_p)?;
    check_tol(a.tol)?;
    if let Some(r) = a.radius {
        positive("--R", r)?;
    }
    if let Some(lc) = a.correlation_length {
        positive("--lc", lc)?;
    }
    let reduced = m.at_separation(l);
    let c = lifshitz::energy_curvature(reduced, a.tol)?;
    let l_m = l * NM;
    let scale = HBAR_C / l_m.powi(3);
    let (force_n, warnings) = match a.radius {
        Some(r) => {
            let geometry = Geometry::new(l)?.with_sphere(r)?;
            let f = lifshitz::plane_sphere_force(&geometry, m, a.correlation_length, a.tol)?;
            (Some(f.force), f.warnings)
        }
        None => (None, Vec::new()),
    };
    let report = EnergyReport {
        separation_nm: l,
        lambda_p_nm: a.lambda_p,
        k_p: reduced.k_p(),
        reduced_energy: c.energy.e,
        reduced_energy_error: c.energy.error_estimate,
        energy_per_area_j_m2: scale * c.energy.e,
        reduction_factor: c.energy.e / lifshitz::ideal_reduced_energy(),
        energy_slope_j_m3: scale / l_m * c.slope,
        energy_curvature_j_m4: scale / (l_m * l_m) * c.curvature,
        g0: c.g0(),
        curvature_ratio: c.curvature_ratio(),
        radius_nm: a.radius,
        force_n,
        warnings,
    };
    emit(&report, json_mode, out)
}

/// Writes `# key=value` metadata, the header and rows, or a JSON document.
struct Table {
    metadata: Vec<(String, String)>,
    header: &'static str,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.header.split(','))?;
        for row in &self.rows {
            csv.write_record(row.iter().map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            }))?;
        }
        csv.flush()
    }

    fn to_json(&self) -> Value {
        let names: Vec<&str> = self.header.split(',').collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(names.iter().map(|n| n.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        let metadata: serde_json::Map<String, Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({ "metadata": metadata, "rows": rows })
    }

    fn emit(&self, output: Option<&Path>, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
        match output {
            Some(path) => {
                let file = File::create(path).map_err(io_err(path))?;
                let mut w = BufWriter::new(file);
                self.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(path))?;
                let summary = json!({ "output": path.display().to_string(), "rows": self.rows.len() });
                emit(&summary, json_mode, out)
            }
            None if json_mode => emit(&self.to_json(), true, out),
            None => self.write_csv(out).map_err(io_err(Path::new("<stdout>"))),
        }
    }
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn cmd_rho(a: &RhoArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let l = positive("--L", a.separation)?;
    let m = mirror(a.lambda_p)?;
    check_tol(a.tol)?;
    let ks = grid(a.k_min, a.k_max, a.points, Spacing::Log, "k")?;
    let profile = ResponseProfile::new(m.at_separation(l), a.tol)?;
    let samples: Result<Vec<_>, ResponseError> = thread_pool()?.install(|| {
        ks.par_iter()
            .map(|&k| response::sample(&profile, a.model, k, l))
            .collect()
    });
    let table = Table {
        metadata: meta(&[
            ("command", "rho".into()),
            ("L_nm", fmt(l)),
            ("lambda_p_nm", fmt(a.lambda_p)),
            ("model", a.model.to_string()),
            ("tol", fmt(a.tol)),
        ]),
        header: RHO_HEADER,
        rows: samples?
            .into_iter()
            .map(|s| vec![s.k.into(), s.q.into(), s.rho.into(), s.model.as_str().into()])
            .collect(),
    };
    table.emit(a.output.as_deref(), json_mode, out)
}

fn cmd_alpha(a: &AlphaArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let m = mirror(a.lambda_p)?;
    if m == Mirror::Perfect {
        return Err(usage("alpha needs a plasma mirror; --lambda-p must be positive"));
    }
    check_tol(a.tol)?;
    let ls = grid(a.l_min, a.l_max, a.points, Spacing::Log, "L")?;
    let rows: Result<Vec<_>, CliError> = thread_pool()?.install(|| {
        ls.par_iter()
            .map(|&l| {
                let k_p = m.at_separation(l).k_p().unwrap_or(0.0);
                let alpha = response::alpha(k_p, a.tol)?;
                Ok(vec![l.into(), (alpha.alpha_over_l * l).into()])
            })
            .collect()
    });
    let table = Table {
        metadata: meta(&[
            ("command", "alpha".into()),
            ("lambda_p_nm", fmt(a.lambda_p)),
            ("tol", fmt(a.tol)),
        ]),
        header: ALPHA_HEADER,
        rows: rows?,
    };
    table.emit(a.output.as_deref(), json_mode, out)
}

#[derive(Debug, Serialize)]
pub struct DeltaReport {
    pub separation_nm: f64,
    pub lambda_p_nm: f64,
    pub spectrum: String,
    pub delta: f64,
    pub model: ResponseModel,
    pub regime: Regime,
    pub quad_error: f64,
    pub curvature_ratio: f64,
    pub variance_nm2: f64,
    pub correlation_length_nm: Option<f64>,
    pub pfa_delta: f64,
    pub scaling_delta: Option<f64>,
    /// `delta / scaling_delta`
    pub scaling_ratio: Option<f64>,
    /// `Delta l_C L / (sqrt(pi) a^2)` in the plasmon_rough regime
    pub plasmon_coefficient: Option<f64>,
    pub plasmon_ratio_quoted: Option<f64>,
    pub plasmon_ratio_composed: Option<f64>,
    pub warnings: Vec<String>,
}

impl DeltaReport {
    fn new(
        r: CorrectionResult,
        separation: f64,
        lambda_p: f64,
        spectrum: String,
        threshold: f64,
    ) -> Result<Self, CliError> {
        let regime = match r.correlation_length {
            Some(lc) if r.variance > 0.0 => classify_regime(separation, lambda_p, lc, threshold),
            _ => r.regime,
        };
        let scaling = match (regime, r.correlation_length) {
            (Regime::Crossover, _) | (_, None) => None,
            (regime, Some(lc)) => Some(scaling_delta(regime, separation, lambda_p, lc, r.variance)?),
        };
        let plasmon = match (regime, r.correlation_length) {
            (Regime::PlasmonRough, Some(lc)) => {
                Some(r.delta * lc * separation / (std::f64::consts::PI.sqrt() * r.variance))
            }
            _ => None,
        };
        Ok(DeltaReport {
            separation_nm: separation,
            lambda_p_nm: lambda_p,
            spectrum,
            delta: r.delta,
            model: r.model,
            regime,
            quad_error: r.quad_error,
            curvature_ratio: r.curvature_ratio,
            variance_nm2: r.variance,
            correlation_length_nm: r.correlation_length,
            pfa_delta: r.pfa_delta,
            scaling_delta: scaling,
            scaling_ratio: scaling.map(|s| r.delta / s),
            plasmon_coefficient: plasmon,
            plasmon_ratio_quoted: plasmon.map(|p| p / PLASMON_ROUGH_QUOTED),
            plasmon_ratio_composed: plasmon.map(|p| p / PLASMON_ROUGH_COMPOSED),
            warnings: r.warnings,
        })
    }
}

fn cmd_delta(a: &DeltaArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let l = positive("--L", a.separation)?;
    let m = mirror(a.lambda_p)?;
    check_tol(a.tol)?;
    positive("--threshold", a.threshold)?;
    let spectrum = a.spectrum.load()?;
    let r = correction::delta(l, m, &spectrum, a.model, a.tol)?;
    let report = DeltaReport::new(r, l, a.lambda_p, a.spectrum.describe(), a.threshold)?;
    emit(&report, json_mode, out)
}

fn sweep_point(
    a: &SweepArgs,
    m: Mirror,
    spectrum: &RoughnessSpectrum,
    shared: Option<&ResponseProfile>,
    value: f64,
) -> Result<CorrectionResult, CliError> {
    Ok(match a.axis {
        Axis::Separation => correction::delta(value, m, spectrum, a.model, a.tol)?,
        Axis::Wavevector => {
            let l = a.separation.unwrap_or_default();
            let profile = shared.expect("profile for fixed L");
            correction::delta_ring(profile, l, m, value, spectrum.variance(a.tol)?, a.model)?
        }
        Axis::CorrelationLength => {
            let l = a.separation.unwrap_or_default();
            let profile = shared.expect("profile for fixed L");
            let a2 = spectrum.variance(a.tol)?;
            let g = RoughnessSpectrum::Gaussian(GaussianSpectrum::new(a2, value)?);
            correction::delta_with_profile(profile, l, m, &g, a.model, a.tol)?
        }
    })
}

fn cmd_sweep(a: &SweepArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let m = mirror(a.lambda_p)?;
    check_tol(a.tol)?;
    let values = grid(a.min, a.max, a.points, a.spacing, a.axis.name())?;
    let spectrum = a.spectrum.load()?;
    if a.axis == Axis::CorrelationLength && !matches!(spectrum, RoughnessSpectrum::Gaussian(_)) {
        return Err(usage("--axis lc needs a Gaussian --spectrum"));
    }
    let shared = match (a.axis, a.separation) {
        (Axis::Separation, _) => None,
        (_, Some(l)) => Some(ResponseProfile::new(m.at_separation(positive("--L", l)?), a.tol)?),
        (_, None) => return Err(usage(format!("--L is required for --axis {}", a.axis.name()))),
    };
    let results: Result<Vec<_>, CliError> = thread_pool()?.install(|| {
        values
            .par_iter()
            .map(|&v| sweep_point(a, m, &spectrum, shared.as_ref(), v))
            .collect()
    });
    let rows = values
        .iter()
        .zip(results?)
        .map(|(&v, r)| vec![v.into(), r.delta.into(), r.model.as_str().into(), r.regime.as_str().into()])
        .collect();
    let mut metadata = meta(&[
        ("command", "sweep".into()),
        ("axis", a.axis.name().into()),
        ("lambda_p_nm", fmt(a.lambda_p)),
        ("spectrum", a.spectrum.describe()),
        ("model", a.model.to_string()),
        ("tol", fmt(a.tol)),
    ]);
    if let Some(l) = a.separation {
        metadata.push(("L_nm".into(), fmt(l)));
    }
    let table = Table { metadata, header: SWEEP_HEADER, rows };
    table.emit(Some(&a.output), json_mode, out)
}

fn cmd_oracle(a: &OracleArgs, json_mode: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let set = oracle::golden_values(a.n, a.k_max)?;
    let mut text = serde_json::to_string_pretty(&set)?;
    text.push('\n');
    std::fs::write(&a.output, text).map_err(io_err(&a.output))?;
    let summary = json!({ "output": a.output.display().to_string(), "values": set.values.len() });
    emit(&summary, json_mode, out)
}
