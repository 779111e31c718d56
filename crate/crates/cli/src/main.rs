use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridcast::pipeline::FeatureSet;
use hybridcast::ErrorClass;

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(
    name = "hybridcast",
    version,
    about = "Feature selection and hybrid CNN/LSTM forecasting"
)]
pub struct Cli {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Seed for model initialization and, for synthetic data, the panel.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Config overrides; each is validated exactly like the field it replaces.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    #[arg(long, global = true)]
    pub dilation: Option<usize>,

    /// Fixed λ for both the ridge and the SCAD selection.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// SCAD shape parameter.
    #[arg(long, global = true)]
    pub a: Option<f64>,

    #[arg(long = "lr", global = true)]
    pub learning_rate: Option<f64>,

    /// Model variant: cnn, lstm, cnn_lstm or dilated_cnn_lstm.
    #[arg(long, global = true)]
    pub variant: Option<String>,

    /// Feature lag, for selection and for the synthetic generator.
    #[arg(long, global = true)]
    pub lag: Option<usize>,

    /// Length of a synthetic panel.
    #[arg(long, global = true)]
    pub n_days: Option<usize>,

    /// Number of comparison seeds.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,

    /// Which selection feeds `train`.
    #[arg(long, global = true, value_enum)]
    pub features: Option<Features>,

    /// Train on every exogenous column, ignoring selection files.
    #[arg(long, global = true)]
    pub all_features: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Features {
    Rr,
    Scad,
    All,
}

impl From<Features> for FeatureSet {
    fn from(f: Features) -> Self {
        match f {
            Features::Rr => FeatureSet::Rr,
            Features::Scad => FeatureSet::Scad,
            Features::All => FeatureSet::All,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ridge and SCAD feature selection.
    Select,
    /// Train one model on a selected feature set.
    Train,
    /// Re-score a checkpoint on the test span.
    Evaluate {
        /// Defaults to `<out>/checkpoint.json`.
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Five-model comparison over several seeds.
    Compare,
    /// Finite-difference check of every analytic gradient.
    Gradcheck {
        #[arg(long)]
        instances: Option<usize>,
        /// Perturbs one block's analytic gradient so the check must fail.
        #[arg(long, hide = true)]
        corrupt_block: Option<String>,
    },
    /// Write a synthetic panel and its ground truth.
    Synth,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
