//! `qtrack`: generate toy events, build sector graphs, train and evaluate
//! the tree tensor network edge classifier.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 for
//! data, schema and I/O errors, 3 for numeric failures during training.

mod commands;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtrack_core::Error as CoreError;

/// Bad flags, config files or manifests.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "qtrack",
    version,
    about = "Quantum edge classifier for track seeding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Root directory for all outputs
    #[arg(long)]
    pub out: Option<String>,
    /// `name=value` settings file; flags take precedence
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Replay the resolved settings of an earlier run
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic events as CSV triplets
    Gen(commands::GenArgs),
    /// Build labeled sector graphs from event CSVs
    Preprocess(commands::PreprocessArgs),
    /// Train the classifier on preprocessed subgraphs
    Train(commands::TrainArgs),
    /// Report purity, efficiency and accuracy of a trained model
    Eval(commands::EvalArgs),
    /// Write per-edge probabilities of a trained model
    Predict(commands::EvalArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::Config(_)
            | CoreError::Argument(_)
            | CoreError::Size(..)
            | CoreError::Index { .. },
        ) => 1,
        Some(CoreError::Numeric(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // core errors already embed their source in the message
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
