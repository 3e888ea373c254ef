//! Experiment runner behind the `qdsim` binary.
//!
//! Each experiment writes its data file plus `summary.json` into the output
//! directory. Outputs depend only on the resolved configuration, so two runs
//! with the same flags produce byte-identical files. Wall-clock time goes to
//! stderr, never into the files.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qdsim::analysis::{noise_sweep, SweepPoint, DEFAULT_GRID};
use qdsim::compiler::{CalibrationOptions, RotationTiming};
use qdsim::engine::{Frame, IntegratorConfig};
use qdsim::model::{basis_labels, load_profile, DensityMatrix, DeviceProfile, NoiseScope, Sign};
use qdsim::protocols::{
    bell_prep, cnot_truth_table, entanglement_swap, rabi, sample_outcomes, teleport, CorrectionMode, ProtocolContext,
    SWAP_TABLE,
};

pub const TOOL: &str = "qdsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Length of each Rabi drive and trace sampling interval.
const RABI_DURATION: f64 = 200e-9;
const RABI_INTERVAL: f64 = 0.5e-9;
const CNOT_INTERVAL: f64 = 0.5e-9;

#[derive(Debug, Parser)]
#[command(name = "qdsim", version, about = "Pulse-level quantum-dot spin-qubit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its outputs.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rabi,
    Cnot,
    Bell,
    Swap,
    Teleport,
    NoiseSweep,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Calibrated R_Y(pi/2) length from the profile, when present.
    Device,
    /// `t = |theta| / (2 pi B)` from the drive amplitude.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corrections {
    PostProcess,
    Pulses,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment to run (alternatively `--experiment`).
    #[arg(value_enum)]
    pub name: Option<Experiment>,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Device profile JSON; the bundled five-dot profile when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Teleported state angle in radians.
    #[arg(long, default_value_t = FRAC_PI_2, allow_negative_numbers = true)]
    pub theta: f64,
    /// Noise-sweep stage; all three when omitted.
    #[arg(long)]
    pub scope: Option<String>,
    /// Comma-separated relative exchange errors.
    #[arg(long)]
    pub delta_j_grid: Option<String>,
    #[arg(long, default_value = "rwa")]
    pub frame: String,
    /// Integration step in seconds; frame default when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Enables sampled measurement records for swap and teleport.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long, value_enum, default_value_t = Timing::Device)]
    pub timing: Timing,
    #[arg(long, value_enum, default_value_t = Corrections::PostProcess)]
    pub corrections: Corrections,
}

/// Failure of a run, written to `error.json`.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<qdsim::Error> for CliError {
    fn from(e: qdsim::Error) -> Self {
        CliError { kind: e.kind().to_string(), message: e.to_string() }
    }
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError { kind: "config".into(), message: message.into() }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError { kind: "io".into(), message: format!("{}: {e}", path.display()) }
}

/// Fully resolved run configuration, recorded in `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub profile_path: Option<String>,
    pub profile: DeviceProfile,
    pub theta: f64,
    pub scopes: Vec<NoiseScope>,
    pub delta_j_grid: Vec<f64>,
    pub frame: Frame,
    pub integrator: IntegratorConfig,
    pub timing: Timing,
    pub corrections: Corrections,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let grid = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            f64::from_str(s).map_err(|_| config_err(format!("bad delta-j value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() {
        return Err(config_err("delta-j grid is empty"));
    }
    Ok(grid)
}

impl ExperimentConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let experiment = match (args.name, args.experiment) {
            (Some(a), Some(b)) if a != b => return Err(config_err(format!("conflicting experiments `{a}` and `{b}`"))),
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(config_err("no experiment given")),
        };
        let profile = match &args.profile {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                load_profile(&text)?
            }
            None => DeviceProfile::reference(),
        };
        if !args.theta.is_finite() {
            return Err(config_err("theta must be finite"));
        }
        let frame = Frame::from_str(&args.frame)?;
        let mut integrator = IntegratorConfig::for_frame(frame);
        if let Some(dt) = args.dt {
            integrator = integrator.with_dt(dt);
        }
        integrator.validate()?;
        let scopes = match &args.scope {
            Some(s) => vec![NoiseScope::from_str(s)?],
            None => vec![NoiseScope::Swap, NoiseScope::Teleport, NoiseScope::Full],
        };
        let delta_j_grid = match &args.delta_j_grid {
            Some(text) => parse_grid(text)?,
            None => DEFAULT_GRID.to_vec(),
        };
        for &dj in &delta_j_grid {
            if !(0.0..1.0).contains(&dj) {
                return Err(config_err(format!("delta-j {dj} outside [0, 1)")));
            }
        }
        if args.seed.is_some() && args.shots == 0 {
            return Err(config_err("shots must be positive"));
        }
        Ok(ExperimentConfig {
            experiment,
            profile_path: args.profile.as_ref().map(|p| p.display().to_string()),
            profile,
            theta: args.theta,
            scopes,
            delta_j_grid,
            frame,
            integrator,
            timing: args.timing,
            corrections: args.corrections,
            seed: args.seed,
            shots: args.seed.map(|_| args.shots),
        })
    }

    fn context(&self) -> Result<ProtocolContext, CliError> {
        let options = CalibrationOptions {
            timing: match self.timing {
                Timing::Device => RotationTiming::Device,
                Timing::ClosedForm => RotationTiming::ClosedForm,
            },
            ..CalibrationOptions::default()
        };
        let ctx = ProtocolContext::new(self.profile.clone(), self.frame, self.integrator, &options)?;
        Ok(ctx.with_corrections(match self.corrections {
            Corrections::PostProcess => CorrectionMode::PostProcess,
            Corrections::Pulses => CorrectionMode::Pulses,
        }))
    }
}

fn ns(seconds: f64) -> f64 {
    seconds * 1e9
}

fn matrix_json(rho: &DensityMatrix) -> Value {
    json!({
        "basis": basis_labels(rho.n_qubits()),
        "matrix": rho.to_pairs(),
    })
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn run_rabi(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let runs = rabi(&cfg.profile, cfg.frame, &cfg.integrator, RABI_DURATION, RABI_INTERVAL)?;
    let n = cfg.profile.n_dots;
    let mut header = vec!["drive_dot".to_string(), "drive_frequency_hz".to_string()];
    header.extend(runs[0].trace.header());
    let mut rows = Vec::new();
    for r in &runs {
        for (t, p) in &r.trace.rows {
            let mut row = vec![(r.dot + 1).to_string(), r.frequency.to_string(), ns(*t).to_string()];
            row.extend(p.iter().map(|x| x.to_string()));
            rows.push(row);
        }
    }
    out.csv("rabi.csv", &header, &rows)?;
    let dots: Vec<Value> = runs
        .iter()
        .map(|r| {
            json!({
                "dot": r.dot + 1,
                "drive_frequency_hz": r.frequency,
                "pi_time_ns": ns(r.pi_time),
                "flip_probability": r.flip_probability,
                "max_spectator_probability": r.max_spectator,
            })
        })
        .collect();
    Ok(json!({ "n_dots": n, "drive_duration_ns": ns(RABI_DURATION), "dots": dots }))
}

fn run_cnot(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ctx = cfg.context()?;
    let n = cfg.profile.n_dots;
    let mut header: Vec<String> = ["control", "target", "input", "t_ns"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("p_up_{i}")));
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for lower in 0..n - 1 {
        let table = cnot_truth_table(&ctx, lower, CNOT_INTERVAL)?;
        for r in &table.rows {
            for (t, p) in &r.trace.rows {
                let mut row = vec![
                    (table.control + 1).to_string(),
                    (table.target + 1).to_string(),
                    r.input.clone(),
                    ns(*t).to_string(),
                ];
                row.extend(p.iter().map(|x| x.to_string()));
                rows.push(row);
            }
        }
        pairs.push(json!({
            "control": table.control + 1,
            "target": table.target + 1,
            "duration_ns": ns(table.duration),
            "rows": table.rows.iter().map(|r| json!({
                "input": r.input,
                "expected": r.expected,
                "probability": r.probability,
            })).collect::<Vec<_>>(),
        }));
    }
    out.csv("cnot.csv", &header, &rows)?;
    Ok(json!({ "pairs": pairs }))
}

fn run_bell(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ctx = cfg.context()?;
    let r = bell_prep(&ctx)?;
    let mut body = matrix_json(&r.reduced);
    body["dots"] = json!([1, 2, 3, 4]);
    body["fidelity"] = json!(r.fidelity);
    body["duration_ns"] = json!(ns(r.schedule.total_duration()));
    out.json("bell.json", &body)?;
    Ok(json!({ "fidelity": r.fidelity, "duration_ns": ns(r.schedule.total_duration()) }))
}

fn sampled(cfg: &ExperimentConfig, labels: &[String], probabilities: &[f64]) -> Result<Option<Value>, CliError> {
    let (Some(seed), Some(shots)) = (cfg.seed, cfg.shots) else {
        return Ok(None);
    };
    let counts = sample_outcomes(probabilities, shots, seed)?;
    let map: serde_json::Map<String, Value> = labels.iter().cloned().zip(counts.into_iter().map(Value::from)).collect();
    Ok(Some(json!({ "seed": seed, "shots": shots, "counts": map })))
}

fn run_swap(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ctx = cfg.context()?;
    let r = entanglement_swap(&ctx)?;
    let branches: Vec<Value> = r
        .branches
        .iter()
        .zip(SWAP_TABLE)
        .map(|(b, (_, bell))| {
            let mut v = matrix_json(b.reduced.as_ref().expect("swap branches carry reduced states"));
            v["outcome"] = json!(b.outcome);
            v["heralded"] = json!(bell.name());
            v["probability"] = json!(b.probability);
            v["fidelity"] = json!(b.fidelity);
            v["concurrence"] = json!(b.concurrence);
            v
        })
        .collect();
    let labels: Vec<String> = r.branches.iter().map(|b| b.outcome.clone()).collect();
    let probs: Vec<f64> = r.branches.iter().map(|b| b.probability).collect();
    let mut body = json!({
        "measured_dots": [2, 3],
        "reduced_dots": [1, 4],
        "duration_ns": ns(r.duration()),
        "branches": branches,
    });
    if let Some(s) = sampled(cfg, &labels, &probs)? {
        body["samples"] = s;
    }
    out.json("swap.json", &body)?;
    let min = r.branches.iter().filter_map(|b| b.fidelity).fold(1.0, f64::min);
    Ok(json!({ "duration_ns": ns(r.duration()), "min_branch_fidelity": min }))
}

fn run_teleport(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ctx = cfg.context()?;
    let r = teleport(&ctx, cfg.theta)?;
    let branches: Vec<Value> = r
        .branches
        .iter()
        .map(|b| {
            json!({
                "outcome": b.outcome,
                "probability": b.probability,
                "correction": b.correction.to_string(),
                "pre_correction": matrix_json(&b.reduced),
                "p_down": b.p_down,
                "p_up": b.p_up,
                "fidelity": b.fidelity,
            })
        })
        .collect();
    let labels: Vec<String> = r.branches.iter().map(|b| b.outcome.clone()).collect();
    let probs: Vec<f64> = r.branches.iter().map(|b| b.probability).collect();
    let table: serde_json::Map<String, Value> =
        r.rule.table.iter().map(|(k, v)| (k.clone(), Value::from(v.to_string()))).collect();
    let mut body = json!({
        "theta": r.theta,
        "channel": r.rule.channel.name(),
        "measured_dots": [4, 5],
        "swap_duration_ns": ns(r.swap_duration()),
        "teleport_duration_ns": ns(r.teleport_duration()),
        "total_duration_ns": ns(r.total_duration()),
        "corrections": table,
        "branches": branches,
    });
    if let Some(s) = sampled(cfg, &labels, &probs)? {
        body["samples"] = s;
    }
    out.json("teleport.json", &body)?;
    Ok(json!({
        "theta": r.theta,
        "total_duration_ns": ns(r.total_duration()),
        "min_branch_fidelity": r.min_fidelity(),
    }))
}

fn sweep_row(p: &SweepPoint) -> Vec<String> {
    let mut row = vec![
        p.scope.to_string(),
        p.sign.to_string(),
        p.delta_j.to_string(),
        p.avg_fidelity.to_string(),
        p.avg_concurrence.to_string(),
        p.branch_labels.join(";"),
    ];
    row.extend(p.branch_fidelity.iter().map(|x| x.to_string()));
    row.extend(p.branch_probability.iter().map(|x| x.to_string()));
    row
}

fn run_noise_sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let ctx = cfg.context()?;
    let mut header: Vec<String> = ["scope", "sign", "delta_j", "avg_fidelity", "avg_concurrence", "branches"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=4).map(|k| format!("fidelity_{k}")));
    header.extend((1..=4).map(|k| format!("probability_{k}")));
    let mut rows = Vec::new();
    let mut worst = serde_json::Map::new();
    for &scope in &cfg.scopes {
        let r = noise_sweep(&ctx, scope, &cfg.delta_j_grid, &[Sign::Plus, Sign::Minus], cfg.theta)?;
        rows.extend(r.points.iter().map(sweep_row));
        let max_dj = r.points.iter().map(|p| p.delta_j).fold(0.0, f64::max);
        let at = |s| r.point(s, max_dj).map(|p| json!({ "avg_fidelity": p.avg_fidelity, "avg_concurrence": p.avg_concurrence }));
        worst.insert(scope.to_string(), json!({ "delta_j": max_dj, "plus": at(Sign::Plus), "minus": at(Sign::Minus) }));
    }
    out.csv("noise_sweep.csv", &header, &rows)?;
    Ok(json!({ "theta": cfg.theta, "largest_delta_j": worst }))
}

/// Runs the configured experiment and writes `summary.json`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Value, CliError> {
    let mut out = Output::new(out_dir)?;
    let results = match cfg.experiment {
        Experiment::Rabi => run_rabi(cfg, &mut out)?,
        Experiment::Cnot => run_cnot(cfg, &mut out)?,
        Experiment::Bell => run_bell(cfg, &mut out)?,
        Experiment::Swap => run_swap(cfg, &mut out)?,
        Experiment::Teleport => run_teleport(cfg, &mut out)?,
        Experiment::NoiseSweep => run_noise_sweep(cfg, &mut out)?,
    };
    let mut files = out.files.clone();
    files.push("summary.json".into());
    let summary = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": cfg,
        "files": files,
        "results": results,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn write_error(dir: &Path, err: &CliError) {
    let body = json!({ "tool": TOOL, "version": VERSION, "error": { "kind": err.kind, "message": err.message } });
    if fs::create_dir_all(dir).is_ok() {
        let text = serde_json::to_string_pretty(&body).expect("json values serialize") + "\n";
        let _ = fs::write(dir.join("error.json"), text);
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let Command::Run(args) = cli.command;
    let started = Instant::now();
    let result = ExperimentConfig::resolve(&args).and_then(|cfg| execute(&cfg, &args.out));
    match result {
        Ok(_) => {
            eprintln!("{TOOL}: wrote {} in {:.2?}", args.out.display(), started.elapsed());
            0
        }
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            write_error(&args.out, &e);
            1
        }
    }
}
