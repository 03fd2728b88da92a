//! `blendcnn`: vocabulary, training, distillation, evaluation and
//! throughput commands over CSV text classification data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const OUT_ENV: &str = "BLENDCNN_OUT";

/// Malformed or inconsistent configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Parser)]
#[command(name = "blendcnn", version, about = "Train and distill small CNN text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunSpec {
    /// JSON config; keys may be dotted (`"model.n_layers": 3`) or nested.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory. Defaults to `$BLENDCNN_OUT/<command>`, else `runs/<command>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a vocabulary from `data.train_csv`.
    BuildVocab(RunSpec),
    /// Train a model directly on labeled examples.
    Train {
        #[command(flatten)]
        spec: RunSpec,
        /// Train the 8-layer surrogate teacher on the `data.teacher_per_class` pool.
        #[arg(long)]
        teacher: bool,
    },
    /// Write teacher logits for the labeled and unlabeled examples.
    InferLogits {
        #[command(flatten)]
        spec: RunSpec,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train a student against teacher logits.
    Distill {
        #[command(flatten)]
        spec: RunSpec,
        /// JSONL of `{"id", "logits"}` rows from `infer-logits`.
        #[arg(long)]
        logits: PathBuf,
        /// Leave the unlabeled pool out.
        #[arg(long)]
        labeled_only: bool,
    },
    /// Score a checkpoint on `data.test_csv`.
    Eval {
        #[command(flatten)]
        spec: RunSpec,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Measure inference throughput and write the comparison report.
    Bench {
        #[command(flatten)]
        spec: RunSpec,
        /// Benchmark these checkpoints instead of freshly initialised `bench.models`.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
    },
    /// Print the parameter breakdown of `model`.
    ParamCount(RunSpec),
    /// Write a synthetic corpus in the AG News CSV layout.
    SynthCorpus(RunSpec),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use blendcnn_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } | E::MissingInput(_) => 3,
                E::NonFinite(_) => 5,
                E::Config(_) | E::Parse { .. } | E::Dimension { .. } | E::InvalidArgument(_) | E::StaleCache(_) => 4,
            };
        }
        if cause.is::<ConfigError>() {
            return 4;
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    1
}

/// Error chain joined with ": ", skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildVocab(spec) => commands::build_vocab(&spec),
        Command::Train { spec, teacher } => commands::train(&spec, teacher),
        Command::InferLogits { spec, checkpoint } => commands::infer(&spec, &checkpoint),
        Command::Distill {
            spec,
            logits,
            labeled_only,
        } => commands::distill(&spec, &logits, labeled_only),
        Command::Eval { spec, checkpoint } => commands::eval(&spec, &checkpoint),
        Command::Bench { spec, checkpoint } => commands::bench(&spec, &checkpoint),
        Command::ParamCount(spec) => commands::param_count(&spec),
        Command::SynthCorpus(spec) => commands::synth_corpus(&spec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
