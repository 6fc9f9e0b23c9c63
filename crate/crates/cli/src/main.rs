//! Command-line front end for training, transferring and evaluating SCADA
//! anomaly detectors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scada_ae::TransferMethod;

#[derive(Debug, Parser)]
#[command(name = "scada-ae", version, about = "Autoencoder anomaly detection for wind-turbine SCADA data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Turbine data: one CSV, the shared schema and the turbine's config.
#[derive(Debug, Args)]
struct DataArgs {
    /// SCADA CSV file
    #[arg(long)]
    data: PathBuf,
    /// Column schema (JSON)
    #[arg(long)]
    schema: PathBuf,
    /// Turbine config (JSON)
    #[arg(long)]
    config: PathBuf,
}

/// Optional time slice; dates (`2024-01-01`) or RFC 3339 instants.
#[derive(Debug, Args)]
struct WindowArgs {
    /// Inclusive window start
    #[arg(long)]
    from: Option<String>,
    /// Exclusive window end
    #[arg(long)]
    to: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic farm: one CSV and config per turbine plus the schema.
    Synth {
        /// Farm spec (JSON); defaults apply to missing fields
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model from scratch on one turbine, or on several with --multi.
    Train {
        /// SCADA CSV file; repeat together with --config for --multi
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        schema: PathBuf,
        /// Turbine config (JSON), one per --data in the same order
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Pool several turbines into one model
        #[arg(long)]
        multi: bool,
        /// Training hyperparameters (JSON)
        #[arg(long)]
        train_config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        window: WindowArgs,
        /// Output model artifact
        #[arg(long)]
        out: PathBuf,
    },
    /// Carry a trained model over to another turbine.
    Transfer {
        /// Source model artifact
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        target: DataArgs,
        #[arg(long, value_parser = parse_method)]
        method: TransferMethod,
        /// Length of the tuning window in months
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
        months: u32,
        /// End of the tuning window; defaults to the end of the source model's data
        #[arg(long)]
        tuning_end: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare models on one evaluation window.
    Evaluate {
        /// Model artifact; repeat for several. The id is the file stem.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        #[command(flatten)]
        eval: DataArgs,
        /// Id of the reference model; defaults to the first model
        #[arg(long)]
        baseline: Option<String>,
        /// Defaults to the month after the baseline's data
        #[command(flatten)]
        window: WindowArgs,
        /// Report (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Report (CSV); defaults to the JSON path with a .csv extension
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write score, threshold, detections and criticality per timestamp.
    CaseStudy {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        window: WindowArgs,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full transfer protocol described by an experiment config.
    Experiment {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Directory for the report files
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<TransferMethod, String> {
    s.parse::<TransferMethod>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
