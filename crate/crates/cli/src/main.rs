use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use kinetic_cascade::coeffs::{grid_coefficients, monte_carlo_coefficients};
use kinetic_cascade::{resume_md, run_experiment, ExperimentConfig, ExperimentId, KeyValues};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "kinetic-cascade",
    version,
    about = "Hard spheres, linearized Boltzmann and Stokes-Fourier experiments"
)]
struct Cli {
    /// Directory for cached collision operators.
    #[arg(long, global = true, default_value = ".kinetic-cache")]
    cache: PathBuf,
    /// Do not read or write the operator cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (E1..E5) and write its summary, manifest and tables.
    Run {
        #[arg(long)]
        experiment: ExperimentId,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conductivity and viscosity on a square velocity grid.
    Coeffs {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Also run the Sonine Monte Carlo check with this many samples.
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 4)]
        mc_order: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Advance an MD checkpoint to time `t`.
    Md {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        t: f64,
        /// Write here instead of overwriting the checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cache = (!cli.no_cache).then_some(cli.cache);
    match cli.command {
        Command::Run { experiment, config, seed, out } => {
            let params = match config {
                Some(p) => KeyValues::load(&p)?,
                None => KeyValues::default(),
            };
            let cfg = ExperimentConfig::new(experiment, seed, params)?;
            let outcome = run_experiment(&cfg, &out, cache)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            log::info!("{} finished in {:.1} s", experiment, outcome.seconds);
            if !outcome.report.passed() {
                std::process::exit(2);
            }
        }
        Command::Coeffs { d, grid, mc_samples, mc_order, seed } => {
            let g = grid_coefficients(d, grid, cache.as_deref())?;
            let mc = mc_samples.map(|s| monte_carlo_coefficients(mc_order, s, seed)).transpose()?;
            println!("{}", serde_json::to_string_pretty(&json!({ "grid": g, "monte_carlo": mc }))?);
        }
        Command::Md { checkpoint, t, out } => {
            let r = resume_md(&checkpoint, t, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
    }
    Ok(())
}
