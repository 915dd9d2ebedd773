//! Command-line front end.
//!
//! Output files (all comma-separated with a header row):
//!
//! | command | file | columns |
//! |---|---|---|
//! | `run` | `run.csv` | `deadline,energy,kill_rate,fairness_all,fairness_killed` |
//! | `run` | `frames.csv` | `frame,energy,kill_rate` |
//! | `sweep` | `sweep.csv` | `deadline,energy,kill_rate,fairness_all,fairness_killed` |
//! | `gen-workload` | `trace.csv` | `task_1,...,task_N` |
//!
//! Undefined fairness values are written as `NA`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::experiment::{Experiment, ExperimentError};
use crate::feasibility::{check_schedulability, Schedulability};
use crate::sim::{generate_workload, rep_seed, run_scenario, sweep_frame_length, EngineState, SweepRow};

#[derive(Debug, Parser)]
#[command(name = "framedvs", version, about = "Frame-based DVS scheduling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the repetition count.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate at the configured frame length.
    Run { experiment: PathBuf },
    /// Simulate every frame length in `deadlines`.
    Sweep { experiment: PathBuf },
    /// Write the synthetic workload of repetition 0 as a trace file.
    GenWorkload {
        experiment: PathBuf,
        /// Trace destination; default `<out>/trace.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check schedulability and print danger zones and kill times.
    Validate { experiment: PathBuf },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Invalid(m) => CliError::Validation(m),
            e @ ExperimentError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// `Display` of the value, `NA` when undefined.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub const METRICS_HEADER: &str = "deadline,energy,kill_rate,fairness_all,fairness_killed";

fn metrics_line(r: &SweepRow) -> String {
    format!("{},{},{},{},{}", r.deadline, r.energy, r.kill_rate, fmt_opt(r.fairness_all), fmt_opt(r.fairness_killed))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn load(cli: &Cli, path: &Path) -> Result<Experiment, CliError> {
    let mut exp = Experiment::load(path)?;
    if let Some(seed) = cli.seed {
        exp.config.seed = seed;
    }
    if let Some(reps) = cli.reps {
        if reps == 0 {
            return Err(CliError::Validation("--reps: must be >= 1".into()));
        }
        exp.config.reps = reps;
    }
    if let Some(out) = &cli.out {
        exp.output_dir = out.clone();
    }
    Ok(exp)
}

/// Runs the parsed command, writing human-readable output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let say = |stdout: &mut dyn Write, line: String| -> Result<(), CliError> {
        if cli.quiet {
            return Ok(());
        }
        writeln!(stdout, "{line}").map_err(|e| CliError::Io(e.to_string()))
    };
    match &cli.command {
        Command::Run { experiment } => {
            let exp = load(cli, experiment)?;
            let m = run_scenario(&exp.config, &exp.workload)?;
            let row = SweepRow {
                deadline: exp.config.deadline,
                energy: m.energy,
                kill_rate: m.kill_rate,
                fairness_all: m.fairness_all,
                fairness_killed: m.fairness_killed,
            };
            write_file(&exp.output_dir.join("run.csv"), &format!("{METRICS_HEADER}\n{}\n", metrics_line(&row)))?;
            let mut frames = String::from("frame,energy,kill_rate\n");
            for (f, (e, k)) in m.energy_per_frame.iter().zip(&m.kill_rate_per_frame).enumerate() {
                frames.push_str(&format!("{},{e},{k}\n", f + 1));
            }
            write_file(&exp.output_dir.join("frames.csv"), &frames)?;
            say(
                stdout,
                format!(
                    "kill_rate={} energy={} fairness_all={} fairness_killed={}",
                    m.kill_rate,
                    m.energy,
                    fmt_opt(m.fairness_all),
                    fmt_opt(m.fairness_killed)
                ),
            )?;
            if m.deadline_misses > 0 {
                log::error!("{} frames missed their deadline", m.deadline_misses);
            }
        }
        Command::Sweep { experiment } => {
            let exp = load(cli, experiment)?;
            let rows = sweep_frame_length(&exp.config, &exp.deadlines, &exp.workload)?;
            let mut text = format!("{METRICS_HEADER}\n");
            for r in &rows {
                text.push_str(&metrics_line(r));
                text.push('\n');
            }
            let path = exp.output_dir.join("sweep.csv");
            write_file(&path, &text)?;
            say(stdout, format!("{} rows written to {}", rows.len(), path.display()))?;
        }
        Command::GenWorkload { experiment, trace } => {
            let exp = load(cli, experiment)?;
            let matrix = generate_workload(&exp.workload, rep_seed(exp.config.seed, 0))?;
            let path = trace.clone().unwrap_or_else(|| exp.output_dir.join("trace.csv"));
            let mut buf = Vec::new();
            matrix.write_csv(&mut buf).map_err(|e| io_err(&path, e))?;
            write_file(&path, &String::from_utf8(buf).expect("csv output is utf-8"))?;
            let list = |v: Vec<u64>| v.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
            say(stdout, format!("frames: {} (phase 1: {})", matrix.frames(), exp.workload.phase1_frames()))?;
            say(stdout, format!("wcec_phase1 = [{}]", list(exp.workload.initial_wcecs())))?;
            say(stdout, format!("wcec_phase2 = [{}]", list(exp.workload.final_wcecs())))?;
        }
        Command::Validate { experiment } => {
            let exp = load(cli, experiment)?;
            let cfg = &exp.config;
            let matrix = generate_workload(&exp.workload, rep_seed(cfg.seed, 0))?;
            let ts = cfg.initial_taskset(&exp.workload, &matrix)?;
            let state = EngineState::new(ts.clone(), &cfg.menu, &cfg.kill_policy)?;
            let need = ts.max_speed_demand(&cfg.menu);
            let d = ts.deadline();
            say(stdout, format!("tasks: {}  D = {d}  sum(w)/f_M = {need}", ts.len()))?;
            if need > d {
                // warnings are shown even with --quiet
                writeln!(stdout, "warning: sum(w)/f_M = {need} exceeds D = {d}; the task set is infeasible")
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
            let fmt = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
            say(stdout, format!("danger zones: [{}]", fmt(state.zones.as_slice())))?;
            say(stdout, format!("kill times: [{}]", fmt(state.kill_times.as_slice())))?;
            match check_schedulability(&state.schedules, &ts, &cfg.menu)? {
                // the step test holds vacuously once z_1 < 0
                Schedulability::Feasible if need > d => say(stdout, "schedulability: overloaded".into())?,
                Schedulability::Feasible => say(stdout, "schedulability: ok".into())?,
                Schedulability::Violated(v) => say(
                    stdout,
                    format!(
                        "schedulability: violated for task {} at t = {} ({} < {})",
                        v.task + 1,
                        v.t,
                        v.frequency,
                        v.required
                    ),
                )?,
            }
        }
    }
    Ok(())
}
