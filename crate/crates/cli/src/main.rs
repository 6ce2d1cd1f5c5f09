//! `limi`: run the fairness-testing pipeline from the shell.
//!
//! Every verb reads the same run config, writes its artifacts into the
//! output directory and prints its report as JSON on stdout. Failures exit
//! with a code per error family (config 2, io 3, data 4, method 5, metric 6,
//! bridge 7).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use limi::pipeline::{self, RunConfig};
use limi::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "limi", version, about = "Latent-space fairness testing for black-box classifiers")]
struct Cli {
    /// Run config (JSON). Defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the original experiment sizes instead of the desk defaults.
    #[arg(long, global = true)]
    full_scale: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "LIMI_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the copula generator to the training data.
    FitGen,
    /// Train the configured target model.
    TrainModel,
    /// Fit the surrogate boundary in latent space and report its fitness.
    Approximate,
    /// Probe latents along the boundary for discriminatory instances.
    Probe,
    /// Random-latent baseline with the probe's budget.
    BaselineRandom,
    /// Naturalness and fairness of a discriminatory-instance file.
    Evaluate {
        /// Instance file; defaults to the probe's output.
        #[arg(long)]
        d_idi: Option<PathBuf>,
        /// Report name, written as `<name>.json`.
        #[arg(long, default_value = "evaluation")]
        name: String,
    },
    /// Retrain the model with sampled discriminatory instances.
    Retrain {
        #[arg(long)]
        d_idi: Option<PathBuf>,
    },
    /// Probe once per λ with shared seeds.
    AblateLambda {
        /// Comma-separated grid; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if cli.full_scale {
        cfg = cfg.full_scale();
    }
    Ok(cfg)
}

fn print<T: Serialize>(report: T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    }
    let cfg = config(cli)?;
    match &cli.command {
        Command::FitGen => print(pipeline::cmd_fit_gen(&cfg)?),
        Command::TrainModel => print(pipeline::cmd_train_model(&cfg)?),
        Command::Approximate => print(pipeline::cmd_approximate(&cfg)?),
        Command::Probe => print(pipeline::cmd_probe(&cfg)?),
        Command::BaselineRandom => print(pipeline::cmd_baseline_random(&cfg)?),
        Command::Evaluate { d_idi, name } => {
            let path = d_idi.clone().unwrap_or_else(|| cfg.d_idi_path());
            print(pipeline::cmd_evaluate(&cfg, &path, name)?)
        }
        Command::Retrain { d_idi } => {
            let path = d_idi.clone().unwrap_or_else(|| cfg.d_idi_path());
            print(pipeline::cmd_retrain(&cfg, &path)?)
        }
        Command::AblateLambda { lambdas } => {
            let grid = lambdas.clone().unwrap_or_else(|| cfg.lambdas.clone());
            print(pipeline::cmd_ablate_lambda(&cfg, &grid)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.family().exit_code() as u8)
        }
    }
}
