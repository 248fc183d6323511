//! Experiment runner behind the `fddpred` binary.
//!
//! ```text
//! fddpred [--config <path>] [--seed <u64>] [--out <dir>] <generate|train|evaluate|sweep>
//! ```
//!
//! Every command reads one JSON [`ExperimentConfig`]; `--seed` and `--out`
//! override the `seed` and `out_dir` keys. `FDDPRED_THREADS` caps the worker
//! pool. Outputs are CSV files with fixed headers plus a one-line JSON summary
//! on stdout.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
//! failure.

mod commands;
mod config;
mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{cmd_evaluate, cmd_generate, cmd_train, EVALUATE_HEADER, HISTORY_HEADER};
pub use config::{
    BandSettings, BerSettings, ExperimentConfig, LosSettings, MetricSettings, PredictorKind, ScenarioKind,
    SumRateSettings, SweepSettings, WienerSettings,
};
pub use sweep::{cmd_sweep, SweepKind};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "fddpred", version, about = "Uplink-to-downlink CSI prediction testbench")]
pub struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset and write `dataset.fddcsi`.
    Generate,
    /// Train the network on a dataset; writes `model.fddnn`, its `.json`
    /// sidecar and `history.csv`.
    Train {
        /// Dataset file; generated from the configuration when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score the configured predictor on the test split; writes `metrics.csv`.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Checkpoint for the `nn` predictor (default `<out>/model.fddnn`).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Multi-run sweep; writes `sweep_<kind>.csv`.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
    },
}

impl ValueEnum for SweepKind {
    fn value_variants<'a>() -> &'a [Self] {
        &SweepKind::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 1,
        Error::Format(_) | Error::Io { .. } | Error::Shape { .. } => 2,
        Error::Numerical(_) | Error::Singular { .. } | Error::Diverged { .. } => 3,
    }
}

fn configure_threads() -> crate::Result<()> {
    if let Ok(value) = std::env::var("FDDPRED_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("FDDPRED_THREADS must be a positive integer, got {value:?}")))?;
        // Ignore the error raised when a pool already exists (repeated calls
        // within one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Resolves the configuration and runs one command.
pub fn run(cli: Cli) -> crate::Result<()> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let summary = match cli.command {
        Command::Generate => cmd_generate(&cfg)?,
        Command::Train { dataset } => cmd_train(&cfg, dataset.as_deref())?,
        Command::Evaluate { dataset, model } => cmd_evaluate(&cfg, dataset.as_deref(), model.as_deref())?,
        Command::Sweep { kind } => cmd_sweep(&cfg, kind)?,
    };
    println!("{summary}");
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fddpred: {e}");
            exit_code(&e)
        }
    }
}
