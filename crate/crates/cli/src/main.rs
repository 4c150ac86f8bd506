use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sphgd_cli::chart::{emit_chart, ChartSpec};
use sphgd_cli::{run_file, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "sphgd", version, about = "Run spherical-harmonic gradient-descent and statistical-query experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
        /// Audit every statistical-query response against an independent estimate.
        #[arg(long)]
        audit: bool,
    },
    /// Draw columns of a result CSV as an SVG line chart.
    Chart {
        csv: PathBuf,
        /// Comma-separated columns to plot.
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        #[arg(long, default_value = "iteration")]
        x: String,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
        /// Linear instead of logarithmic y axis.
        #[arg(long)]
        linear: bool,
    },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output_dir, seed, threads, audit } => {
            let opts = RunOptions { output_dir, seed, threads, audit };
            match run_file(&config, &opts) {
                Ok(m) => {
                    println!("{}", serde_json::json!({ "status": m.status, "experiment": m.experiment, "files": m.files.len(), "flags": m.flags }));
                    if m.flagged() {
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Chart { csv, columns, x, output, title, linear } => {
            let spec = ChartSpec { title: title.unwrap_or_else(|| csv.display().to_string()), x_column: x, columns, log_y: !linear };
            match emit_chart(&csv, &spec, &output) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
    }
}
