//! `faultgraph`: unsupervised bearing-fault detection from the command line.
//!
//! Exit codes: 0 success, 1 invalid arguments/config/inputs, 2 runtime
//! failure (for example a diverging training run).

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::Outputs;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "faultgraph", version, about = "Graph-based unsupervised fault detection for vibration signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cut a labeled group of 300-point windows out of the manifest records
    Ingest {
        #[command(flatten)]
        args: commands::IngestArgs,
        /// Directory for dataset.csv and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Extract and scale the 23 features of every window
    Features {
        #[command(flatten)]
        args: commands::FeaturesArgs,
        /// Directory for features.csv, features.scaling.json and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build the weighted k-nearest-neighbour digraph
    Graph {
        #[command(flatten)]
        args: commands::GraphArgs,
        /// Directory for graph.csv, graph.json and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the graph autoencoder, score every object and flag the top n
    Detect {
        #[command(flatten)]
        args: commands::DetectArgs,
        /// Directory for report.json, scores.csv, model.json and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score objects with a baseline detector (ae, lof or cof)
    Baseline {
        #[command(flatten)]
        args: commands::BaselineArgs,
        /// Directory for report.json, scores.csv and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// AUC, accuracy, detection and false-alarm rates of a report
    Eval {
        #[command(flatten)]
        args: commands::EvalArgs,
        /// Directory for eval.json and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the detector over a parameter grid
    Sweep {
        #[command(flatten)]
        args: commands::SweepArgs,
        /// Directory for sweep.csv, sweep.json and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Project the features onto their two leading principal components
    Pca {
        #[command(flatten)]
        args: commands::PcaArgs,
        /// Directory for pca.csv and run.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run every stage end to end from one JSON config
    #[command(after_long_help = config::CONFIG_HELP)]
    Pipeline {
        #[command(flatten)]
        args: commands::PipelineArgs,
        /// Overrides the config's out_dir
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Features { .. } => "features",
            Command::Graph { .. } => "graph",
            Command::Detect { .. } => "detect",
            Command::Baseline { .. } => "baseline",
            Command::Eval { .. } => "eval",
            Command::Sweep { .. } => "sweep",
            Command::Pca { .. } => "pca",
            Command::Pipeline { .. } => "pipeline",
        }
    }

    fn run(&self) -> Result<(PathBuf, Outputs), CliError> {
        let staged = |out_dir: &PathBuf, outputs: Outputs| Ok((out_dir.clone(), outputs));
        match self {
            Command::Ingest { args, out_dir } => staged(out_dir, commands::ingest(args)?),
            Command::Features { args, out_dir } => staged(out_dir, commands::features(args)?),
            Command::Graph { args, out_dir } => staged(out_dir, commands::graph(args)?),
            Command::Detect { args, out_dir } => staged(out_dir, commands::detect_cmd(args)?),
            Command::Baseline { args, out_dir } => staged(out_dir, commands::baseline(args)?),
            Command::Eval { args, out_dir } => staged(out_dir, commands::eval(args)?),
            Command::Sweep { args, out_dir } => staged(out_dir, commands::sweep(args)?),
            Command::Pca { args, out_dir } => staged(out_dir, commands::pca(args)?),
            Command::Pipeline { args, out_dir } => {
                let (config_dir, outputs) = commands::pipeline(args)?;
                Ok((out_dir.clone().unwrap_or(config_dir), outputs))
            }
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    version: &'a str,
    rng: &'a str,
    config: &'a Value,
    seeds: &'a std::collections::BTreeMap<&'static str, u64>,
    outputs: Vec<&'a str>,
    timings_s: &'a std::collections::BTreeMap<&'static str, f64>,
}

fn write_outputs(command: &str, dir: &Path, outputs: &Outputs) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    for (name, bytes) in &outputs.files {
        faultgraph::io::write_atomic(&dir.join(name), bytes).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        rng: faultgraph::rng::ALGORITHM,
        config: &outputs.config,
        seeds: &outputs.seeds,
        outputs: outputs.files.iter().map(|(n, _)| n.as_str()).collect(),
        timings_s: &outputs.timings,
    };
    faultgraph::io::write_json(&dir.join("run.json"), &record).map_err(|e| CliError::runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let result = cli
        .command
        .run()
        .and_then(|(dir, outputs)| write_outputs(name, &dir, &outputs).map(|()| (dir, outputs)));
    match result {
        Ok((dir, outputs)) => {
            for (file, _) in &outputs.files {
                eprintln!("wrote {}", dir.join(file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
