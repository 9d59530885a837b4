//! `seeker`: command-line front end for bundle generation and scoring.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "seeker", version, about = "Trojan hide-and-seek benchmark forge and scorer")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Values from `--config` fill in
/// anything not given on the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON file with default values for these flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for machine-readable outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pipeline id, or a comma-separated list for gen-bundle.
    #[arg(long, global = true)]
    pub pipeline: Option<String>,
    #[arg(long = "p-infect", global = true)]
    pub p_infect: Option<f64>,
    /// Trigger width.
    #[arg(long, global = true)]
    pub r: Option<usize>,
    /// Rarity threshold for trigger nets.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Test vectors per instance for detect; SAT conflicts for check-equiv.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// uniform | rare_guided
    #[arg(long, global = true)]
    pub strategy: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a BENCH file and report its statistics.
    Parse { file: PathBuf },
    /// Apply one restructuring pipeline.
    Restructure { file: PathBuf },
    /// Plant one validated Trojan.
    InsertHt { file: PathBuf },
    /// Prove two circuits equivalent or print a distinguishing input.
    CheckEquiv { a: PathBuf, b: PathBuf },
    /// Generate a sealed bundle from a JSON bundle config.
    GenBundle,
    /// Run the golden-model detector over a bundle.
    Detect {
        /// Bundle directory (holding manifest.json).
        #[arg(long)]
        bundle: PathBuf,
        /// Golden source circuits; names are file stems.
        #[arg(long, required = true, num_args = 1..)]
        golden: Vec<PathBuf>,
    },
    /// Score a verdict file against the reveal file.
    Score {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        reveal: PathBuf,
        #[arg(long)]
        verdicts: PathBuf,
    },
    /// Extract feature vectors from a bundle or a list of circuits.
    Features {
        #[arg(long, conflicts_with = "files")]
        bundle: Option<PathBuf>,
        files: Vec<PathBuf>,
    },
    /// Fit PCA jointly over a feature table and emit plot data.
    Pca {
        #[arg(long)]
        features: PathBuf,
        /// Reveal file; adds the class column to the scatter output.
        #[arg(long)]
        reveal: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        components: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command, cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::NotEquivalent) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
