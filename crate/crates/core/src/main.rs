use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use amenpois::harness::{render_svg, run, ExperimentConfig, ExperimentResult, RunOptions};

#[derive(Parser)]
#[command(name = "amenpois", version, about = "Compound-Poisson convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write <stem>.csv and <stem>.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads; AMENPOIS_WORKERS overrides this.
        #[arg(long)]
        workers: Option<usize>,
        /// Replaces master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw TV and bound against n from a JSON result.
    Plot {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config and list every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> amenpois::Result<ExitCode> {
    match cmd {
        Command::Run {
            config,
            out_dir,
            workers,
            seed,
        } => {
            let cfg = ExperimentConfig::load_valid(&config)?;
            let out = run(&cfg, &RunOptions { out_dir, workers, seed })?;
            for p in [&out.csv_path, &out.json_path].into_iter().flatten() {
                println!("wrote {}", p.display());
            }
            if let Some(e) = &out.result.error {
                eprintln!("incomplete run: {e}");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { result, out } => {
            let r = ExperimentResult::load(&result)?;
            std::fs::write(&out, render_svg(&r)?)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load_valid(&config)?;
            println!("ok: {} (config_hash {})", cfg.name, cfg.hash());
            Ok(ExitCode::SUCCESS)
        }
    }
}
