//! Command-line front end. Every subcommand writes plot-ready CSV/JSON into
//! the output directory together with `resolved_config.json`.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{cmd_cpr, cmd_fidelity_map, cmd_iv, cmd_synth_iv, cmd_wells};

pub const OUTPUT_DIR_ENV: &str = "QDIODE_OUTPUT_DIR";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Parser)]
#[command(name = "qdiode", version, about = "Superconducting diode toolkit: CPR, transmon wells, chain transfer, I-V analysis")]
pub struct Cli {
    /// Worker threads for parallel sweeps (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where output files go.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = "qdiode-out")]
    pub output_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Skewed current-phase relation: table, critical currents, efficiency.
    Cpr(CprArgs),
    /// Transmon-diode spectrum and central-well bound states.
    Wells(WellsArgs),
    /// Forward/reverse transfer fidelity over (η, t).
    FidelityMap(FidelityMapArgs),
    /// I-V batch: critical currents, η(B) series and sinusoidal fit.
    Iv(IvArgs),
    /// Write a synthetic I-V corpus with a manifest.
    SynthIv(SynthIvArgs),
}

#[derive(Debug, Args)]
pub struct CprArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    /// Table points over [−2π, 2π].
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct WellsArgs {
    #[arg(long = "ej-ec")]
    pub ej_ec: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "sweep", required_unless_present = "sweep")]
    pub eta: Option<f64>,
    /// η sweep as start:stop:step.
    #[arg(long, value_parser = parse_range)]
    pub sweep: Option<Range>,
    #[arg(long, default_value_t = 1.0)]
    pub ec: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ng: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Use the [−3π, 3π] grid.
    #[arg(long, conflicts_with_all = ["phi_min", "phi_max", "grid_points"])]
    pub wide: bool,
    /// Minimum number of eigenstates to report.
    #[arg(long, default_value_t = 10)]
    pub states: usize,
}

#[derive(Debug, Args)]
pub struct FidelityMapArgs {
    /// JSON with optional `chain` and `noise` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Apply noise (the config file's section, else the defaults).
    #[arg(long)]
    pub noise: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Fidelity difference defining an asymmetry region.
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    /// η axis as start:stop:step.
    #[arg(long, value_parser = parse_range)]
    pub eta_grid: Option<Range>,
    /// Time axis in ns as start:stop:step.
    #[arg(long, value_parser = parse_range)]
    pub t_grid: Option<Range>,
}

#[derive(Debug, Args)]
pub struct IvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Detection threshold as a multiple of the low-bias median |dV/dI|.
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 100)]
    pub resamples: usize,
    /// Bootstrap points on each side of the detected critical current.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 3)]
    pub confirm: usize,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    /// Fit an additive offset d as well.
    #[arg(long)]
    pub offset: bool,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct SynthIvArgs {
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub amplitude: f64,
    /// rad/Oe.
    #[arg(long, default_value_t = 0.03)]
    pub frequency: f64,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub phase: f64,
    /// Voltage noise σ in V.
    #[arg(long, default_value_t = 2e-7)]
    pub voltage_noise: f64,
    /// Relative critical-current jitter.
    #[arg(long, default_value_t = 0.005)]
    pub ic_jitter: f64,
}

/// `start:stop:step`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>> {
        crate::transmon::eta_range(self.start, self.stop, self.step)
    }
}

fn parse_range(s: &str) -> std::result::Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got '{s}'"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    let r = Range {
        start: num(a)?,
        stop: num(b)?,
        step: num(c)?,
    };
    if !(r.step > 0.0 && r.stop >= r.start) {
        return Err(format!("range '{s}' needs step > 0 and stop >= start"));
    }
    Ok(r)
}

/// Runs a parsed command line, inside a sized thread pool if requested.
pub fn run(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::InvalidInput("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli))
        }
        None => dispatch(&cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out = &cli.output_dir;
    let summary = match &cli.command {
        Command::Cpr(a) => cmd_cpr(a, out)?,
        Command::Wells(a) => cmd_wells(a, out)?,
        Command::FidelityMap(a) => cmd_fidelity_map(a, out)?,
        Command::Iv(a) => cmd_iv(a, out)?,
        Command::SynthIv(a) => cmd_synth_iv(a, out)?,
    };
    print!("{summary}");
    Ok(())
}
