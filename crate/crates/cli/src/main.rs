//! Command-line front end: filter banks, detection, selection and benchmarks.

mod audio;
mod image_cmd;
mod report;
mod select;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use protofeat::config::ExperimentConfig;
use protofeat::{ErrorClass, Result};

#[derive(Parser)]
#[command(
    name = "protofeat",
    version,
    about = "Trainable line filters and audio event features"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set detect.hop=0.05`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// B-COSFIRE filter banks on images.
    #[command(subcommand)]
    Bcosfire(image_cmd::BcosfireCmd),
    /// COPE features and event detection on audio.
    #[command(subcommand)]
    Cope(audio::CopeCmd),
    /// Feature subset selection.
    #[command(subcommand)]
    Featsel(select::FeatselCmd),
    /// Synthetic datasets.
    #[command(subcommand)]
    Synth(audio::SynthCmd),
    /// Heat-map images.
    #[command(subcommand)]
    Render(image_cmd::RenderCmd),
    /// Print the effective configuration.
    Config,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| protofeat::Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Bcosfire(c) => image_cmd::run_bcosfire(c, &cfg),
        Command::Cope(c) => audio::run_cope(c, &cfg),
        Command::Featsel(c) => select::run(c, &cfg),
        Command::Synth(c) => audio::run_synth(c, &cfg),
        Command::Render(c) => image_cmd::run_render(c, &cfg),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Internal => 4,
            })
        }
    }
}
