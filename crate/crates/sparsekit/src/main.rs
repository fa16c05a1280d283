use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sparsekit::cli;

/// Sparse-training toolkit: mask tokens, merge tokens, select key samples,
/// and simulate the combined pipeline on a synthetic workload.
#[derive(Parser)]
#[command(name = "sparsekit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomly mask a fraction of a token set.
    Mask {
        /// Token-set JSON file.
        #[arg(long)]
        input: PathBuf,
        /// Fraction of tokens to drop, in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the masked token set.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the mask plan (defaults to <out> with .plan.json).
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Merge a token set down to its key tokens using attention inputs.
    Merge {
        /// Token-set JSON file.
        #[arg(long)]
        tokens: PathBuf,
        /// Attention inputs JSON file ({"q": ..., "k": ..., "v": ...}).
        #[arg(long)]
        attention: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select the key subset of samples from a loss log.
    Select {
        /// Loss log (JSON Lines; epoch -1 is the warm-up record).
        #[arg(long)]
        log: PathBuf,
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured subset size.
        #[arg(long)]
        subset_size: Option<usize>,
        /// Override the configured number of selection epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Run the paired dense/sparse and full/subset experiments.
    Simulate {
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the report files.
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured number of training epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mask {
            input,
            ratio,
            seed,
            out,
            plan_out,
        } => cli::cmd_mask(&cli::MaskArgs {
            input,
            ratio,
            seed,
            out,
            plan_out,
        }),
        Command::Merge {
            tokens,
            attention,
            out,
        } => cli::cmd_merge(&cli::MergeArgs {
            tokens,
            attention,
            out,
        }),
        Command::Select {
            log,
            config,
            out,
            subset_size,
            epochs,
        } => cli::cmd_select(&cli::SelectArgs {
            log,
            config,
            out,
            subset_size,
            epochs,
        }),
        Command::Simulate {
            config,
            out_dir,
            seed,
            epochs,
        } => cli::cmd_simulate(&cli::SimulateArgs {
            config,
            out_dir,
            seed,
            epochs,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
