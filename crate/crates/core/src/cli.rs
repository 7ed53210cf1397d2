//! Command-line surface: `sweep`, `ratio`, `dmconv` and `goldens`.
//!
//! Each command computes everything in memory first and then writes its
//! files plus `report.json` in one pass. Exit codes: 0 success, 2 config or
//! usage error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::cm::{
    cm_impedance_at, cm_impedance_sweep, deviation_db, first_series_resonance, ratio_r,
    AnalysisError, CmPathModel,
};
use crate::config::{load_config, ConfigError, RunConfig};
use crate::dm::{
    apply_asymmetry, build_dm_bench, cm_spectrum, increment_db, trapezoid_harmonics, DmError,
    BALANCE_THRESHOLD,
};
use crate::fault::{apply_fault, parse_fault, FaultError, FaultSpec};
use crate::io;
use crate::motor::{build_motor, MotorError, MotorModel};

pub const REPORT_FILE: &str = "report.json";

/// Faults evaluated by `goldens`, one or more per fault class.
pub const GOLDEN_FAULTS: [&str; 5] = [
    "tt:A:24-27",
    "tt:A:24-34",
    "pp:A:120-B:120",
    "pp:A:264-B:120",
    "pg:A:24",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("fault: {0}")]
    Fault(#[from] FaultError),
    #[error("model: {0}")]
    Motor(#[from] MotorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Dm(#[from] DmError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(
                AnalysisError::InvalidGrid(_)
                | AnalysisError::Extrapolation { .. }
                | AnalysisError::InvalidTable(_),
            ) => 2,
            CliError::Dm(DmError::InvalidExcitation(_) | DmError::InvalidParameter { .. }) => 2,
            CliError::Analysis(_) | CliError::Dm(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stator-emc", version, about = "Stator winding fault CM analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CM impedance sweep, optionally with a fault and its deviation from healthy.
    Sweep(RunArgs),
    /// Faulted/healthy CM current ratio in dB.
    Ratio(RunArgs),
    /// CM current spectrum under DM trapezoidal excitation.
    Dmconv(RunArgs),
    /// Regenerate the reference values of the default scenario.
    Goldens(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fault such as `tt:A:24-34`, `pp:A:120-B:120`, `pg:A:24@0.5`.
    #[arg(long)]
    pub fault: Option<String>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep start, Hz
    #[arg(long)]
    pub freq_start: Option<f64>,
    /// Sweep stop, Hz
    #[arg(long)]
    pub freq_stop: Option<f64>,
    /// Number of sweep points
    #[arg(long)]
    pub points: Option<usize>,
    /// Enables seeded baseline asymmetry.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Resolved inputs shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// Directory that relative CSV paths in the config refer to.
    pub base_dir: PathBuf,
    pub timestamp_unix: u64,
}

impl Context {
    pub fn new(config: RunConfig) -> Self {
        Self {
            config,
            base_dir: PathBuf::from("."),
            timestamp_unix: timestamp_now(),
        }
    }

    /// Loads the config (or defaults), applies flag overrides and validates.
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let (mut config, base_dir) = match &args.config {
            Some(path) => (
                load_config(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        if let Some(v) = args.freq_start {
            config.sweep.f_start = v;
        }
        if let Some(v) = args.freq_stop {
            config.sweep.f_stop = v;
        }
        if let Some(v) = args.points {
            config.sweep.points = v;
        }
        if let Some(seed) = args.seed {
            config.baseline_asymmetry.enabled = true;
            config.baseline_asymmetry.seed = Some(seed);
        }
        if let Some(out) = &args.out {
            config.output.dir = out.clone();
        }
        config.validate()?;
        Ok(Self {
            config,
            base_dir,
            timestamp_unix: timestamp_now(),
        })
    }

    fn path_model(&self) -> Result<CmPathModel, CliError> {
        Ok(self.config.cm_path.resolve(&self.base_dir)?)
    }

    /// Parses a fault string; without an `@ohms` suffix the configured
    /// contact resistance applies.
    pub fn fault(&self, text: &str) -> Result<FaultSpec, CliError> {
        let spec = parse_fault(text)?;
        Ok(if text.contains('@') {
            spec
        } else {
            spec.with_contact(self.config.fault.contact_r)
        })
    }

    fn healthy_model(&self) -> Result<MotorModel, CliError> {
        Ok(build_motor(&self.config.winding, &self.config.parasitics)?)
    }
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the wall clock.
pub fn timestamp_now() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub timestamp_unix: u64,
    pub fault: Option<String>,
    /// The CM path uses built-in stand-in impedances, not measured data.
    pub synthetic_cm_path: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationSummary {
    pub max_abs_db: f64,
    pub at_freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub max_r_db: f64,
    pub at_freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmSummary {
    pub asymmetry_enabled: bool,
    pub reference_max_a: f64,
    pub balanced: bool,
    pub faulted_max_a: Option<f64>,
    pub max_increment_db: Option<f64>,
    pub at_harmonic: Option<usize>,
    pub at_freq_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_series_resonance_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dm: Option<DmSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub golden_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub config: RunConfig,
    pub summary: Summary,
    /// Every file the run writes, `report.json` included.
    pub files: Vec<String>,
}

/// Result of a command before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub report: Report,
}

impl Outputs {
    fn new(
        ctx: &Context,
        command: &'static str,
        fault: Option<&FaultSpec>,
        mut files: Vec<(String, String)>,
        summary: Summary,
        node_map: Option<&MotorModel>,
    ) -> Self {
        if let (true, Some(model)) = (ctx.config.output.node_map, node_map) {
            files.push(("node_map.json".into(), model.node_map_json()));
        }
        let mut manifest: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
        manifest.push(REPORT_FILE.into());
        let report = Report {
            metadata: Metadata {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                config_hash: ctx.config.hash(),
                timestamp_unix: ctx.timestamp_unix,
                fault: fault.map(ToString::to_string),
                synthetic_cm_path: ctx.config.cm_path.is_synthetic(),
            },
            config: ctx.config.clone(),
            summary,
            files: manifest,
        };
        Self { files, report }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, body)| body.as_str())
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes every file and the report into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let fail = |path: &Path, source| CliError::Write {
            path: path.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
        let mut written = Vec::new();
        let report = self.report_json();
        for (name, body) in self
            .files
            .iter()
            .map(|(n, b)| (n.as_str(), b.as_str()))
            .chain(std::iter::once((REPORT_FILE, report.as_str())))
        {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| fail(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn cmd_sweep(ctx: &Context, fault: Option<&str>) -> Result<Outputs, CliError> {
    let fault = fault.map(|f| ctx.fault(f)).transpose()?;
    let healthy = ctx.healthy_model()?;
    let faulted = fault.as_ref().map(|f| apply_fault(&healthy, f)).transpose()?;

    let grid = &ctx.config.sweep;
    let z_healthy = cm_impedance_sweep(&healthy, grid)?;
    let mut summary = Summary {
        first_series_resonance_hz: first_series_resonance(&z_healthy),
        ..Summary::default()
    };
    let mut files = Vec::new();
    match &faulted {
        None => files.push(("cm_impedance.csv".into(), io::impedance_csv(&z_healthy))),
        Some(model) => {
            let z_faulted = cm_impedance_sweep(model, grid)?;
            let dev = deviation_db(&z_healthy, &z_faulted)?;
            summary.deviation = Some(DeviationSummary {
                max_abs_db: dev.max_abs_db,
                at_freq_hz: dev.at_freq,
            });
            files.push(("cm_impedance.csv".into(), io::impedance_csv(&z_faulted)));
            files.push(("deviation_db.csv".into(), io::deviation_csv(&dev)));
        }
    }
    Ok(Outputs::new(
        ctx,
        "sweep",
        fault.as_ref(),
        files,
        summary,
        Some(faulted.as_ref().unwrap_or(&healthy)),
    ))
}

pub fn cmd_ratio(ctx: &Context, fault: &str) -> Result<Outputs, CliError> {
    let fault = ctx.fault(fault)?;
    let path = ctx.path_model()?;
    let healthy = ctx.healthy_model()?;
    let faulted = apply_fault(&healthy, &fault)?;

    let grid = &ctx.config.sweep;
    let z_healthy = cm_impedance_sweep(&healthy, grid)?;
    let z_faulted = cm_impedance_sweep(&faulted, grid)?;
    let curve = ratio_r(&path, &z_healthy, &z_faulted)?;
    let (at, max) = curve.max();
    let summary = Summary {
        first_series_resonance_hz: first_series_resonance(&z_healthy),
        ratio: Some(RatioSummary {
            max_r_db: max,
            at_freq_hz: at,
        }),
        ..Summary::default()
    };
    let files = vec![("ratio_r.csv".into(), io::ratio_csv(&curve))];
    Ok(Outputs::new(ctx, "ratio", Some(&fault), files, summary, Some(&faulted)))
}

pub fn cmd_dmconv(ctx: &Context, fault: Option<&str>) -> Result<Outputs, CliError> {
    let cfg = &ctx.config;
    let fault = fault.map(|f| ctx.fault(f)).transpose()?;
    let reference = apply_asymmetry(&ctx.healthy_model()?, &cfg.baseline_asymmetry)?;
    let faulted = fault
        .as_ref()
        .map(|f| apply_fault(&reference, f))
        .transpose()?;

    let params = cfg.dm_bench.bench_params();
    let floor = cfg.dm_bench.floor;
    let excitation = trapezoid_harmonics(&cfg.excitation)?;
    let ref_spectrum = cm_spectrum(&build_dm_bench(&reference, &params)?, &cfg.excitation)?;
    let reference_max = ref_spectrum.max_magnitude();

    let mut files = vec![
        (
            "excitation_spectrum.csv".to_string(),
            io::voltage_spectrum_csv(&excitation, floor),
        ),
        (
            "cm_spectrum_reference.csv".to_string(),
            io::current_spectrum_csv(&ref_spectrum, floor),
        ),
    ];
    let mut dm = DmSummary {
        asymmetry_enabled: cfg.baseline_asymmetry.enabled,
        reference_max_a: reference_max,
        balanced: reference_max <= BALANCE_THRESHOLD,
        faulted_max_a: None,
        max_increment_db: None,
        at_harmonic: None,
        at_freq_hz: None,
    };
    if let Some(model) = &faulted {
        let spectrum = cm_spectrum(&build_dm_bench(model, &params)?, &cfg.excitation)?;
        let inc = increment_db(&ref_spectrum, &spectrum, floor)?;
        dm.faulted_max_a = Some(spectrum.max_magnitude());
        dm.max_increment_db = Some(inc.max_db);
        dm.at_harmonic = Some(inc.at_harmonic);
        dm.at_freq_hz = Some(spectrum.freq(inc.at_harmonic));
        files.push((
            "cm_spectrum_faulted.csv".into(),
            io::current_spectrum_csv(&spectrum, floor),
        ));
        files.push(("increment_db.csv".into(), io::increment_csv(&spectrum, &inc)));
    }
    let summary = Summary {
        dm: Some(dm),
        ..Summary::default()
    };
    Ok(Outputs::new(
        ctx,
        "dmconv",
        fault.as_ref(),
        files,
        summary,
        Some(faulted.as_ref().unwrap_or(&reference)),
    ))
}

/// Named reference values of the configured scenario, in a fixed order.
pub fn compute_goldens(ctx: &Context) -> Result<Vec<(String, f64)>, CliError> {
    let cfg = &ctx.config;
    let path = ctx.path_model()?;
    let healthy = ctx.healthy_model()?;
    let z_healthy = cm_impedance_sweep(&healthy, &cfg.sweep)?;
    let z_1k = cm_impedance_at(&healthy, &[1e3])?.z[0];

    let mut out: Vec<(String, f64)> = vec![
        ("healthy/cm_z_1khz_mag_ohm".into(), z_1k.norm()),
        ("healthy/cm_z_1khz_phase_deg".into(), z_1k.arg().to_degrees()),
        (
            "healthy/first_series_resonance_hz".into(),
            first_series_resonance(&z_healthy).unwrap_or(f64::NAN),
        ),
    ];

    let params = cfg.dm_bench.bench_params();
    let floor = cfg.dm_bench.floor;
    let null = cm_spectrum(&build_dm_bench(&healthy, &params)?, &cfg.excitation)?;
    let reference = apply_asymmetry(&healthy, &cfg.baseline_asymmetry)?;
    let ref_spectrum = cm_spectrum(&build_dm_bench(&reference, &params)?, &cfg.excitation)?;
    out.push(("dm/null_max_a".into(), null.max_magnitude()));
    out.push(("dm/reference_max_a".into(), ref_spectrum.max_magnitude()));

    for text in GOLDEN_FAULTS {
        let fault = ctx.fault(text)?;
        let faulted = apply_fault(&healthy, &fault)?;
        let z_faulted = cm_impedance_sweep(&faulted, &cfg.sweep)?;
        let dev = deviation_db(&z_healthy, &z_faulted)?;
        let curve = ratio_r(&path, &z_healthy, &z_faulted)?;
        let (r_at, r_max) = curve.max();
        let spectrum = cm_spectrum(
            &build_dm_bench(&apply_fault(&reference, &fault)?, &params)?,
            &cfg.excitation,
        )?;
        let inc = increment_db(&ref_spectrum, &spectrum, floor)?;
        let key = |name: &str| format!("{text}/{name}");
        out.push((key("deviation_max_abs_db"), dev.max_abs_db));
        out.push((key("deviation_at_hz"), dev.at_freq));
        out.push((key("deviation_start_db"), dev.db[0]));
        out.push((key("deviation_stop_db"), dev.db[dev.db.len() - 1]));
        out.push((key("ratio_max_db"), r_max));
        out.push((key("ratio_at_hz"), r_at));
        out.push((key("increment_max_db"), inc.max_db));
        out.push((key("increment_at_harmonic"), inc.at_harmonic as f64));
    }
    Ok(out)
}

pub fn goldens_csv(values: &[(String, f64)]) -> String {
    let mut s = String::from("name,value\n");
    for (name, v) in values {
        s.push_str(name);
        s.push(',');
        s.push_str(&io::sci(*v));
        s.push('\n');
    }
    s
}

pub fn cmd_goldens(ctx: &Context) -> Result<Outputs, CliError> {
    let values = compute_goldens(ctx)?;
    let json = serde_json::json!({
        "config_hash": ctx.config.hash(),
        "version": env!("CARGO_PKG_VERSION"),
        "values": values
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(io::sci(*v))))
            .collect::<serde_json::Map<_, _>>(),
    });
    let files = vec![
        ("goldens.csv".into(), goldens_csv(&values)),
        (
            "goldens.json".into(),
            serde_json::to_string_pretty(&json).expect("json") + "\n",
        ),
    ];
    let summary = Summary {
        golden_count: Some(values.len()),
        ..Summary::default()
    };
    Ok(Outputs::new(ctx, "goldens", None, files, summary, None))
}

/// Runs one parsed command and writes its outputs.
pub fn execute(command: &Command) -> Result<Outputs, CliError> {
    let (args, name) = match command {
        Command::Sweep(a) => (a, "sweep"),
        Command::Ratio(a) => (a, "ratio"),
        Command::Dmconv(a) => (a, "dmconv"),
        Command::Goldens(a) => (a, "goldens"),
    };
    let ctx = Context::from_args(args)?;
    let fault = args.fault.as_deref();
    if let Some(text) = fault {
        // Reject malformed faults before any computation.
        ctx.fault(text)?;
    }
    let outputs = match name {
        "sweep" => cmd_sweep(&ctx, fault)?,
        "ratio" => cmd_ratio(
            &ctx,
            fault.ok_or_else(|| CliError::Usage("ratio requires --fault".into()))?,
        )?,
        "dmconv" => cmd_dmconv(&ctx, fault)?,
        _ => {
            if fault.is_some() {
                return Err(CliError::Usage("goldens takes no --fault".into()));
            }
            cmd_goldens(&ctx)?
        }
    };
    outputs.write_to(&ctx.config.output.dir)?;
    Ok(outputs)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(outputs) => {
            println!("{}", summary_line(&outputs.report));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn summary_line(report: &Report) -> String {
    let s = &report.summary;
    let mut parts = vec![format!("{} ok", report.metadata.command)];
    if let Some(d) = &s.deviation {
        parts.push(format!(
            "max deviation {:.3} dB at {:.4e} Hz",
            d.max_abs_db, d.at_freq_hz
        ));
    }
    if let Some(r) = &s.ratio {
        parts.push(format!("max R {:.3} dB at {:.4e} Hz", r.max_r_db, r.at_freq_hz));
    }
    if let Some(dm) = &s.dm {
        if dm.balanced {
            parts.push("balanced".into());
        }
        if let (Some(db), Some(n)) = (dm.max_increment_db, dm.at_harmonic) {
            parts.push(format!("max increment {db:.3} dB at harmonic {n}"));
        }
    }
    parts.push(format!("{} files", report.files.len()));
    parts.join("; ")
}
