use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "simalign", version, about = "Align sentences between complex and simplified documents")]
pub struct Cli {
    /// Pipeline configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for training and synthetic data; overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Task1,
    Task2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Greedy,
    Classify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode every pair with a trained CRF and write predicted alignments
    Align {
        #[arg(long)]
        corpus: PathBuf,
        /// Model checkpoint; falls back to the config's `model`
        #[arg(long)]
        model: Option<PathBuf>,
        /// Predictions file (annotation JSON lines); stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Gold annotations to evaluate against
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Where to write the evaluation report (JSON)
        #[arg(long, requires = "gold")]
        report: Option<PathBuf>,
    },
    /// Train the CRF on gold sentence alignments
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        /// Per-epoch NLL log (JSON lines); stderr when absent
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a predictions file against gold annotations
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick the similarity threshold with the best dev F1
    Tune {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "task1")]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "greedy")]
        strategy: StrategyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one similarity matrix file per pair
    SimMatrix {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic corpus with gold alignments
    Synth {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long)]
        out_corpus: PathBuf,
        #[arg(long)]
        out_gold: PathBuf,
    },
    /// Run the annotation HTTP service
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        /// Predicted alignments shown to annotators
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Append-only log of human labels
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Built UI assets served at `/`
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}
