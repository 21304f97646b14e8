//! `spinmech` command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or config error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "spinmech", version, about = "Heralded spin entanglement through a hot mechanical oscillator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Named preset (table1-row1 .. table1-row6). `table` takes a comma-separated list.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// TOML parameter file; overrides --preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Threshold α in (0, 1]; 0 selects the α → 0 limit. `sweep` takes a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo trajectories.
    #[arg(long, global = true)]
    pub runs: Option<u64>,
    /// Output file; stdout when absent. A `<out>.manifest.json` is written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary table for a set of presets at α = 0.4.
    Table,
    /// Grid evaluation along one axis.
    Sweep(SweepArgs),
    /// Protocol Monte Carlo at the analytic optimal time.
    Mc,
    /// Kalman filter traces on a synthetic interferometer record.
    KalmanDemo(KalmanArgs),
    /// Teleported-CNOT error budget, or ℰ_T versus C with --curve.
    Budget(BudgetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Cooperativity, in normalized units (Δm = 0, κt ≪ 1).
    C,
    /// Threshold α for the chosen parameter set.
    Alpha,
    /// Interaction time Γt for the chosen parameter set.
    T,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Space points logarithmically.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct KalmanArgs {
    /// Record length in mechanical periods.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Readout laser power [mW]; 0 switches the measurement off.
    #[arg(long, default_value_t = 1.0)]
    pub power_mw: f64,
    #[arg(long, default_value_t = 100)]
    pub steps_per_period: u32,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Start from the cited literature values instead of zeros.
    #[arg(long)]
    pub literature_defaults: bool,
    #[arg(long)]
    pub e_control: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub e_init: Option<f64>,
    #[arg(long)]
    pub e_ro: Option<f64>,
    #[arg(long)]
    pub e_cnot: Option<f64>,
    #[arg(long)]
    pub e_nuc: Option<f64>,
    #[arg(long)]
    pub gamma_ratio: Option<f64>,
    /// Mechanical readout duration [s].
    #[arg(long)]
    pub t_ro: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Count nuclear dephasing over one attempt instead of the time to success.
    #[arg(long)]
    pub per_attempt: bool,
    /// Emit ℰ_T(C) over a log grid instead of a single budget.
    #[arg(long)]
    pub curve: bool,
    #[arg(long, default_value_t = 1.0)]
    pub c_from: f64,
    #[arg(long, default_value_t = 1e8)]
    pub c_to: f64,
    #[arg(long, default_value_t = 57)]
    pub c_points: usize,
}

/// Marks errors caused by bad input so they map to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<spinmech::Error>() {
        Some(err) if err.is_usage() => 2,
        _ => 1,
    }
}
