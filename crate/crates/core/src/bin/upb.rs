//! `upb`: command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 pipeline failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use upb::cli::{run_command, RunOptions};
use upb::config::RunConfig;

#[derive(Parser)]
#[command(name = "upb", version, about = "Coupled Kerr-resonator photon blockade toolkit")]
struct Cli {
    /// TOML configuration; sections not given fall back to the built-in sample.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for synthetic measurements.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Samples per packet for synthetic measurements.
    #[arg(long, global = true)]
    packet_size: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Derived circuit parameters and the flux sweep.
    Device,
    /// g2(0) against the pump detuning.
    G2Sweep,
    /// g2(tau) at a few detunings.
    G2Tau,
    /// g2(0) and population over both detunings.
    Map,
    /// Minimal g2(0) against population.
    Envelope,
    /// Synthetic measurement with calibration and error bars.
    MeasureDemo,
    /// Print the built-in configuration.
    DefaultConfig,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Device => "device",
            Command::G2Sweep => "g2-sweep",
            Command::G2Tau => "g2-tau",
            Command::Map => "map",
            Command::Envelope => "envelope",
            Command::MeasureDemo => "measure-demo",
            Command::DefaultConfig => "default-config",
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<upb::Error>() {
        Some(upb::Error::Config(_)) => EXIT_CONFIG,
        _ => EXIT_PIPELINE,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Command::DefaultConfig = cli.command {
        print!("{}", upb::config::DEFAULT_CONFIG);
        return Ok(());
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(upb::Error::Config("--workers must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker pool")?;
    }
    if cli.packet_size == Some(0) {
        return Err(upb::Error::Config("--packet-size must be positive".into()).into());
    }
    let opts = RunOptions { out_dir: cli.out.clone(), seed: cli.seed, packet_size: cli.packet_size };
    let name = cli.command.name();
    let outcome = run_command(name, &cfg, &opts)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.failed > 0 {
        eprintln!("{name}: {} of {} points failed; see the status column", outcome.failed, outcome.points);
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
