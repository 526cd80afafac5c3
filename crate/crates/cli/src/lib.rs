//! Experiment runner for neural-unit identification and lateral-skew
//! control: data generation, model identification, controller tuning,
//! closed-loop evaluation and a real-time latency check.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod presets;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::AppError;

#[derive(Parser)]
#[command(
    name = "honu",
    about = "Neural-unit identification and lateral-skew control experiments",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct ConfigArgs {
    /// Path to a TOML experiment configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset: fig5, fig6, fig7, fig8 or fig9.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (default: the config's [output] dir).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the surrogate plant dataset.
    Generate {
        #[command(flatten)]
        args: ConfigArgs,
        /// Override the plant and excitation seeds.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Identify a neural model from a recorded dataset.
    Identify {
        /// Dataset CSV produced by `generate`.
        dataset: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Tune a neural controller against an identified model.
    Control {
        /// Model file produced by `identify`.
        model: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
        /// Also evaluate the tuned controller against the surrogate plant.
        #[arg(long)]
        plant: bool,
        /// Override the plant seed used with --plant.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Measure the combined controller+model step cost.
    Bench {
        #[command(flatten)]
        args: ConfigArgs,
        /// Budget for the mean step cost in milliseconds.
        #[arg(long, value_name = "X", default_value_t = 5.0)]
        budget_ms: f64,
        /// Number of measured steps.
        #[arg(long, value_name = "N", default_value_t = 20_000)]
        steps: usize,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, AppError> {
    match (&args.config, &args.preset) {
        (Some(path), None) => ExperimentConfig::from_file(path),
        (None, Some(name)) => presets::preset(name),
        (None, None) => Ok(ExperimentConfig::default()),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Generate { args, seed } => {
            let mut cfg = load_config(&args)?;
            if let Some(seed) = seed {
                cfg.plant.seed = seed;
                cfg.excitation.seed = seed;
            }
            commands::cmd_generate(&cfg, args.out.as_deref())
        }
        Command::Identify { dataset, args } => {
            let cfg = load_config(&args)?;
            commands::cmd_identify(&cfg, &dataset, args.out.as_deref())
        }
        Command::Control {
            model,
            args,
            plant,
            seed,
        } => {
            let mut cfg = load_config(&args)?;
            if let Some(seed) = seed {
                cfg.plant.seed = seed;
            }
            commands::cmd_control(&cfg, &model, plant, args.out.as_deref())
        }
        Command::Bench {
            args,
            budget_ms,
            steps,
        } => {
            let cfg = load_config(&args)?;
            commands::cmd_bench(&cfg, budget_ms, steps)
        }
    }
}

/// Parse arguments and run; returns the process exit code
/// (0 success, 1 config error, 2 divergence, 3 budget failure).
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
