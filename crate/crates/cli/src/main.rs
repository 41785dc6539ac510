//! Command-line front end for the mixture-density pipeline.
//!
//! Every subcommand is a pure function of its input files, its flags, and
//! `--seed`: repeating a run reproduces its artifacts byte for byte. Each
//! run writes `manifest.txt` into `--out-dir` with the resolved options, a
//! SHA-256 digest per input file, and the names of the outputs.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or
//! validation error, 3 training divergence.

mod commands;
mod context;
mod manifest;
mod parsers;

use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use saltdens::Error;

use commands::data::{BuildDatasetArgs, GenCorpusArgs, IngestArgs};
use commands::eval::{EvaluateArgs, PredictArgs, SweepArgs};
use commands::train::{PretrainArgs, TrainDirectArgs, TransferArgs};

#[derive(Parser)]
#[command(
    name = "saltdens",
    version,
    about = "Density models for molten-salt mixtures: ingestion, training, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw tables and freeze a descriptor column selection.
    Ingest(IngestArgs),
    /// Expand correlations into a featurized training dataset.
    BuildDataset(BuildDatasetArgs),
    /// Train a fresh network on one dataset.
    Pretrain(PretrainArgs),
    /// Run the pretrain / freeze / fine-tune transfer pipeline.
    Transfer(TransferArgs),
    /// Train the transfer-sized architecture from scratch.
    TrainDirect(TrainDirectArgs),
    /// Score a checkpoint against a dataset next to the physics baselines.
    Evaluate(EvaluateArgs),
    /// Predict one mixture density with all three model families.
    Predict(PredictArgs),
    /// Trace predicted density along a temperature or composition axis.
    Sweep(SweepArgs),
    /// Generate a self-consistent synthetic corpus for pipeline exercises.
    GenCorpus(GenCorpusArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let started = Instant::now();
    let result = match cli.command {
        Command::Ingest(args) => commands::data::ingest(args),
        Command::BuildDataset(args) => commands::data::build_dataset(args),
        Command::Pretrain(args) => commands::train::pretrain(args),
        Command::Transfer(args) => commands::train::transfer(args),
        Command::TrainDirect(args) => commands::train::train_direct(args),
        Command::Evaluate(args) => commands::eval::evaluate(args),
        Command::Predict(args) => commands::eval::predict(args),
        Command::Sweep(args) => commands::eval::sweep(args),
        Command::GenCorpus(args) => commands::data::gen_corpus(args),
    };
    match result {
        Ok(()) => eprintln!("done in {:.1} s", started.elapsed().as_secs_f64()),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) => 1,
                Error::Divergence { .. } => 3,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}
