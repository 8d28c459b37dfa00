use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use slatefree::harness::config::ExperimentConfig;
use slatefree::harness::{plot, runner, verify};
use slatefree::Error;

#[derive(Parser)]
#[command(name = "slatefree", version, about = "Tabular slate recommendation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (user, agent, replicate) cell and write episodes.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the optimal values and slates of every user as JSON.
    SolveExact {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the decomposition identity residuals of every user as JSON.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Number of test policies per user (the first is uniform).
        #[arg(long, default_value_t = 20)]
        policies: usize,
    },
    /// Render an episodes CSV as an SVG of smoothed learning curves.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        window: usize,
    },
}

fn print_json(value: &serde_json::Value) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = runner::run_to_dir(&cfg, &out_dir)?;
            for notice in &summary.notices {
                eprintln!("notice: {notice}");
            }
            Ok(())
        }
        Command::SolveExact { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            print_json(&json!({ "discount": cfg.discount, "users": verify::solve_users(&cfg)? }))
        }
        Command::Verify { config, policies } => {
            let cfg = ExperimentConfig::load(&config)?;
            print_json(&serde_json::to_value(verify::verify_identities(&cfg, policies)?)?)
        }
        Command::Plot { csv, out, window } => plot::plot_file(&csv, &out, window),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
