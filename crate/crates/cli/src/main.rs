//! `qwalknet`: quantum walks on entangled ring networks.
//!
//! Settings come from built-in defaults, then the `--config` JSON document,
//! then command-line flags; later sources win. The thread count is taken from
//! `--threads`, else `QWALKNET_THREADS`, else the config, else all cores.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Engine, ExperimentConfig, GraphKind};

#[derive(Parser)]
#[command(name = "qwalknet", version, about = "Quantum walks on entangled ring networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the walk and write distribution, entropy, negativity and distance series.
    Simulate,
    /// Stationary distributions over sweeps of N and alpha, with moments and the N^2 fit.
    Stationary,
    /// Estimate the mean edge parameter from simulated or recorded start-site counts.
    Estimate,
    /// Engine equivalence and conservation checks; exits 1 if any fails.
    Verify {
        /// Flip a coin sign in the conditional engine to exercise the checks.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Standard Hadamard walk on a line or ring.
    Dcqw {
        #[arg(long, value_enum)]
        graph: Option<GraphKind>,
    },
    /// Momentum-basis block structure and revival scan.
    Fourier {
        /// Edge configuration of the conditional walk.
        #[arg(long)]
        config_index: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    engine: Option<Engine>,
    #[arg(long, env = "QWALKNET_THREADS", global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ring size.
    #[arg(short = 'n', long = "vertices", global = true)]
    n: Option<usize>,
    /// Homogeneous edge parameter in [0, 0.5].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Comma-separated edge parameters for a sweep.
    #[arg(long, value_delimiter = ',', global = true)]
    alphas: Option<Vec<f64>>,
    /// Comma-separated ring sizes for a sweep.
    #[arg(long, value_delimiter = ',', global = true)]
    n_values: Option<Vec<usize>>,
    #[arg(long, global = true)]
    t_max: Option<usize>,
    /// Start site.
    #[arg(long, global = true)]
    n0: Option<usize>,
    /// Also write the negativity series (simulate).
    #[arg(long, global = true)]
    negativity: bool,
    /// Averaging window for the estimator.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Shots per time step for the estimator.
    #[arg(long, global = true)]
    m_w: Option<u64>,
    /// Reference curve CSV for the estimator.
    #[arg(long, global = true)]
    curve: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = c.$field.clone() { cfg.$field = v; } )* };
    }
    set!(out, engine, seed, n, alpha, t_max, n0, m_w);
    if let Some(v) = c.threads {
        cfg.threads = Some(v);
    }
    if c.alphas.is_some() {
        cfg.alphas = c.alphas.clone();
    }
    if c.n_values.is_some() {
        cfg.n_values = c.n_values.clone();
    }
    if c.horizon.is_some() {
        cfg.horizon = c.horizon;
    }
    if c.curve.is_some() {
        cfg.curve = c.curve.clone();
    }
    if c.negativity {
        cfg.negativity = true;
    }
    match &cli.command {
        Command::Verify { inject_fault: true } => cfg.inject_fault = true,
        Command::Dcqw { graph: Some(g) } => cfg.graph = *g,
        Command::Fourier { config_index: Some(i) } => cfg.config_index = Some(*i),
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    if let Some(k) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match cli.command {
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Stationary => commands::stationary(&cfg)?,
        Command::Estimate => commands::estimate(&cfg)?,
        Command::Verify { .. } => return commands::verify(&cfg),
        Command::Dcqw { .. } => commands::dcqw(&cfg)?,
        Command::Fourier { .. } => commands::fourier(&cfg)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
