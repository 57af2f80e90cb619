//! Command-line front end: run configuration, subcommands and writers.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or validation error,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::array_model::{ArrayConfig, DEFAULT_SPACING_RATIO};
use crate::error::{Error, Result};
use crate::estimators::{AngularSpectrum, GridSpec};
use crate::experiments::{
    averaged_spectra, rmse_vs_snr, spectrum_correlation, CorrelationMatrix, ExperimentPlan,
    RmseCurve,
};
use crate::method::{parse_method_list, MethodId};
use crate::propagators::{enumerate_operators, Applicability};
use crate::synthesis::Scenario;

pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING_RATIO
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesConfig {
    pub angles_deg: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            start: g.start,
            stop: g.stop,
            step: g.step,
        }
    }
}

/// Declarative description of a run, stored as TOML.
///
/// ```toml
/// sensors = 18
/// spacing_ratio = 0.5
/// snr_db = 5.0
/// snapshots = 200
/// trials = 50
/// seed = 1
///
/// [sources]
/// angles_deg = [10.0, 21.0, 45.0]
/// powers = [1.0, 1.0, 1.0]
///
/// [grid]
/// start = -90.0
/// stop = 90.0
/// step = 0.1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sensors: usize,
    #[serde(default = "default_spacing")]
    pub spacing_ratio: f64,
    pub snr_db: f64,
    pub snapshots: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerate_failures: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinv_rel_tol: Option<f64>,
    pub sources: SourcesConfig,
    #[serde(default)]
    pub grid: GridConfig,
}

impl RunConfig {
    /// Parse and validate.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.plan(Vec::new())?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.sensors, self.spacing_ratio)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let angles = &self.sources.angles_deg;
        let powers = self
            .sources
            .powers
            .clone()
            .unwrap_or_else(|| vec![1.0; angles.len()]);
        Scenario::with_powers(angles, &powers, self.snr_db, self.snapshots, self.seed)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.start, self.grid.stop, self.grid.step)
    }

    /// Experiment plan for the given methods, revalidating every field.
    pub fn plan(&self, methods: Vec<MethodId>) -> Result<ExperimentPlan> {
        let mut plan = ExperimentPlan::new(self.array()?, self.scenario()?, methods, self.trials)?
            .with_grid(self.grid()?)?;
        plan.tolerate_failures = self.tolerate_failures;
        if let Some(tol) = self.pinv_rel_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config(format!(
                    "pinv_rel_tol must be in (0, 1), got {tol}"
                )));
            }
            plan.pinv_rel_tol = Some(tol);
        }
        Ok(plan)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "propdoa",
    version,
    about = "Propagator-family DoA estimation for uniform linear arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the extended propagators available for N sensors and P sources.
    Count(CountArgs),
    /// Averaged angular spectrum of one method, written as CSV.
    Spectrum(SpectrumArgs),
    /// RMSE against SNR for several methods, written as CSV.
    Rmse(RmseArgs),
    /// Correlation matrix between averaged spectra, written as CSV.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub sensors: i64,
    #[arg(long)]
    pub sources: i64,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RmseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_end: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_step: f64,
    /// Comma-separated method identifiers.
    #[arg(long)]
    pub methods: String,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub methods: String,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderOperators {
    pub n: usize,
    pub operators: Vec<String>,
}

/// Result of `count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub sensors: usize,
    pub sources: usize,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub orders: Vec<OrderOperators>,
    pub total: usize,
    pub verdict: String,
}

impl CountReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "sensors N = {}, sources P = {}",
            self.sensors, self.sources
        );
        match (self.n_min, self.n_max) {
            (Some(lo), Some(hi)) => {
                let _ = writeln!(s, "partition order n in {lo}..={hi}");
                for o in &self.orders {
                    let _ = writeln!(s, "  n = {}: {}", o.n, o.operators.join(" "));
                }
            }
            _ => {
                let _ = writeln!(s, "partition order n: none");
            }
        }
        let _ = writeln!(s, "total: {}", self.total);
        let _ = writeln!(s, "{}", self.verdict);
        s
    }
}

pub fn count_report(sensors: i64, sources: i64) -> Result<CountReport> {
    if sensors <= 0 || sources <= 0 {
        return Err(Error::Domain(format!(
            "sensors and sources must be positive, got {sensors} and {sources}"
        )));
    }
    let catalog = enumerate_operators(sensors as usize, sources as usize)?;
    let orders: Vec<OrderOperators> = catalog
        .orders()
        .map(|n| OrderOperators {
            n,
            operators: (1..=n).map(|i| format!("psi:{n}:{i}")).collect(),
        })
        .collect();
    let (n_min, n_max) = match catalog.applicability() {
        Applicability::Extended { n_max } => (Some(2), Some(n_max)),
        _ => (None, None),
    };
    Ok(CountReport {
        sensors: catalog.sensors(),
        sources: catalog.sources(),
        n_min,
        n_max,
        orders,
        total: catalog.cardinality(),
        verdict: catalog.applicability().verdict(),
    })
}

/// Metadata written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub command: String,
    pub methods: Vec<String>,
    pub sensors: usize,
    pub spacing_ratio: f64,
    pub angles_deg: Vec<f64>,
    pub source_powers: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub snapshots: usize,
    pub trials: usize,
    pub seed: u64,
    pub grid: GridConfig,
    pub failed_trials: usize,
}

impl RunMetadata {
    fn new(command: &str, cfg: &RunConfig, plan: &ExperimentPlan, methods: &[MethodId]) -> Self {
        Self {
            command: command.to_string(),
            methods: methods.iter().map(ToString::to_string).collect(),
            sensors: cfg.sensors,
            spacing_ratio: cfg.spacing_ratio,
            angles_deg: plan.scenario.angles_deg().to_vec(),
            source_powers: plan.scenario.source_powers().to_vec(),
            snr_db: vec![cfg.snr_db],
            snapshots: cfg.snapshots,
            trials: cfg.trials,
            seed: cfg.seed,
            grid: cfg.grid,
            failed_trials: 0,
        }
    }
}

/// Sidecar path: the CSV path with `.json` appended.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_outputs(output: &Path, csv: &str, meta: &RunMetadata) -> Result<()> {
    fs::write(output, csv)?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(sidecar_path(output), json + "\n")?;
    Ok(())
}

pub fn spectrum_csv(spectrum: &AngularSpectrum) -> String {
    let mut s = String::from("angle_deg,value\n");
    for (a, v) in spectrum.grid_deg().iter().zip(spectrum.values()) {
        let _ = writeln!(s, "{},{}", format_f64(*a), format_f64(*v));
    }
    s
}

pub fn rmse_csv(curve: &RmseCurve) -> String {
    let mut s = String::from("snr_db");
    for m in &curve.methods {
        let _ = write!(s, ",{m}");
    }
    s.push('\n');
    for (row, snr) in curve.snr_db.iter().enumerate() {
        s.push_str(&format_f64(*snr));
        for col in &curve.rmse_deg {
            let _ = write!(s, ",{}", format_f64(col[row]));
        }
        s.push('\n');
    }
    s
}

pub fn correlation_csv(c: &CorrelationMatrix) -> String {
    let mut s = String::from("method");
    for m in &c.method_ids {
        let _ = write!(s, ",{m}");
    }
    s.push('\n');
    for (m, row) in c.method_ids.iter().zip(&c.entries) {
        s.push_str(m);
        for v in row {
            let _ = write!(s, ",{}", format_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// `start, start + step, ...` up to and including `end`.
pub fn snr_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!(
            "SNR step must be positive, got {step}"
        )));
    }
    if !(start.is_finite() && end.is_finite() && start <= end) {
        return Err(Error::Config(format!(
            "SNR range {start}..{end} is empty or invalid"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn cmd_spectrum(cfg: &RunConfig, method: &str, output: &Path) -> Result<AngularSpectrum> {
    let method: MethodId = method.parse()?;
    let plan = cfg.plan(vec![method])?;
    let avg = averaged_spectra(&plan, &[method])?;
    let mut meta = RunMetadata::new("spectrum", cfg, &plan, &[method]);
    meta.failed_trials = avg.failed_trials.len();
    let spectrum = avg
        .spectra
        .into_iter()
        .next()
        .expect("one method requested");
    write_outputs(output, &spectrum_csv(&spectrum), &meta)?;
    Ok(spectrum)
}

pub fn cmd_rmse(
    cfg: &RunConfig,
    snr_start: f64,
    snr_end: f64,
    snr_step: f64,
    methods: &str,
    output: &Path,
) -> Result<RmseCurve> {
    let methods = parse_method_list(methods)?;
    let snrs = snr_grid(snr_start, snr_end, snr_step)?;
    let plan = cfg.plan(methods.clone())?.with_snr_grid(snrs.clone())?;
    let curve = rmse_vs_snr(&plan)?;
    let mut meta = RunMetadata::new("rmse", cfg, &plan, &methods);
    meta.snr_db = snrs;
    meta.failed_trials = curve.failed_trials.iter().flatten().sum();
    write_outputs(output, &rmse_csv(&curve), &meta)?;
    Ok(curve)
}

pub fn cmd_correlate(cfg: &RunConfig, methods: &str, output: &Path) -> Result<CorrelationMatrix> {
    let methods = parse_method_list(methods)?;
    let plan = cfg.plan(methods.clone())?;
    let avg = averaged_spectra(&plan, &methods)?;
    let corr = spectrum_correlation(&avg.spectra)?;
    let mut meta = RunMetadata::new("correlate", cfg, &plan, &methods);
    meta.failed_trials = avg.failed_trials.len();
    write_outputs(output, &correlation_csv(&corr), &meta)?;
    Ok(corr)
}

/// Execute a parsed command line, writing human output to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Count(a) => {
            let report = count_report(a.sensors, a.sources)?;
            if a.json {
                let json = serde_json::to_string_pretty(&report)
                    .map_err(|e| Error::Config(e.to_string()))?;
                writeln!(out, "{json}")?;
            } else {
                write!(out, "{}", report.render_text())?;
            }
        }
        Command::Spectrum(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let s = cmd_spectrum(&cfg, &a.method, &a.output)?;
            writeln!(out, "wrote {} points to {}", s.len(), a.output.display())?;
        }
        Command::Rmse(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let c = cmd_rmse(
                &cfg,
                a.snr_start,
                a.snr_end,
                a.snr_step,
                &a.methods,
                &a.output,
            )?;
            writeln!(
                out,
                "wrote {} SNR points x {} methods to {}",
                c.snr_db.len(),
                c.methods.len(),
                a.output.display()
            )?;
        }
        Command::Correlate(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let c = cmd_correlate(&cfg, &a.methods, &a.output)?;
            writeln!(
                out,
                "wrote {0}x{0} correlation matrix to {1}",
                c.method_ids.len(),
                a.output.display()
            )?;
        }
    }
    Ok(())
}
