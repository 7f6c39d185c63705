//! `alsel` command-line interface.
//!
//! Every subcommand reads its inputs from files and writes one output file.
//! Randomness comes only from `--seed`, so repeated invocations with the
//! same files and flags produce byte-identical outputs. Failures print one
//! line, `error[<code>]: <message>`, to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use alsel_core::io::{
    read_embeddings, read_json, read_matrix, read_predictions, write_index_set, write_json,
    write_matrix,
};
use alsel_core::sim::{run_experiment, SimConfig};
use alsel_core::{
    badge_gradient_embedding, classwise_variance, classwise_variance_with_clean,
    consistency_embedding, initial_select, query, Error, IndexSet, ProbabilityMatrix, QueryInputs,
    Strategy, StrategyConfig, Temperature,
};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "alsel",
    version,
    about = "Batch selection for semi-supervised active learning"
)]
pub struct Cli {
    /// Worker threads for per-sample computations (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class-wise prediction variances over augmentations (N×C).
    Variance {
        #[arg(long)]
        predictions: PathBuf,
        /// Predictions on the unaugmented samples (N×C), counted as one more observation.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Activations scaled by the summed class-wise variance.
    EmbedConsistency {
        #[command(flatten)]
        model: ModelOutputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Last-layer gradient embeddings under the predicted label (N×(d·C)).
    EmbedBadge {
        #[command(flatten)]
        model: ModelOutputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query a batch with one of the strategies.
    Select(SelectArgs),
    /// Pick an initial labeled set by k-means++ seeding over embeddings.
    SelectInitial {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulated active-learning experiment.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ModelOutputs {
    /// Penultimate-layer activations (ALTF rank 2 or .csv).
    #[arg(long)]
    activations: PathBuf,
    /// Predictions on augmented copies (ALTF rank 3).
    #[arg(long)]
    predictions: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// random, max-entropy, consistency-topk, coreset, badge,
    /// consistency-embedding or initial-diversity.
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    /// Positive number or `greedy`; read by consistency-embedding only.
    #[arg(long, default_value = "0.5")]
    temperature: String,
    /// Already labeled indices, one per line.
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    activations: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Self-supervised embeddings for initial-diversity.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Pool size when no input tensor is given.
    #[arg(long)]
    pool_size: Option<usize>,
    /// Start consistency-embedding from an empty selected set instead of the labeled rows.
    #[arg(long)]
    empty_start: bool,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with a stable code.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let message = match &err {
            Error::MissingInput { strategy, input } => {
                format!("strategy {strategy} requires {}", flag_for(input))
            }
            _ => err.to_string(),
        };
        CliError {
            code: err.code().to_owned(),
            message,
            exit_code: 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let message: String = self
            .message
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "error[{}]: {}", self.code, message)
    }
}

fn flag_for(input: &str) -> &str {
    match input {
        "activations" => "--activations",
        "predictions" => "--predictions",
        "embeddings" => "--embeddings",
        _ => "--pool-size or an input tensor",
    }
}

fn load_labeled(path: Option<&Path>) -> Result<IndexSet, CliError> {
    Ok(match path {
        Some(p) => alsel_core::io::read_index_set(p)?,
        None => IndexSet::new(),
    })
}

fn select(args: &SelectArgs) -> Result<(), CliError> {
    let strategy: Strategy = args.strategy.parse()?;
    let temperature: Temperature = args.temperature.parse()?;
    let require = |flag: &Option<PathBuf>, needed: bool, input: &'static str| {
        if needed && flag.is_none() {
            return Err(CliError::from(Error::MissingInput {
                strategy: strategy.name(),
                input,
            }));
        }
        Ok(())
    };
    require(
        &args.activations,
        strategy.needs_activations(),
        "activations",
    )?;
    require(
        &args.predictions,
        strategy.needs_predictions(),
        "predictions",
    )?;
    require(
        &args.embeddings,
        strategy.needs_ssl_embeddings(),
        "embeddings",
    )?;

    let activations = args.activations.as_ref().map(read_embeddings).transpose()?;
    let predictions = args
        .predictions
        .as_ref()
        .map(read_predictions)
        .transpose()?;
    let embeddings = args.embeddings.as_ref().map(read_embeddings).transpose()?;
    let config = StrategyConfig {
        temperature,
        seed_from_labeled: !args.empty_start,
        ..StrategyConfig::new(strategy, args.budget, args.seed)
    };
    let mut inputs = QueryInputs::new(config).labeled(load_labeled(args.labeled.as_deref())?);
    if let Some(a) = &activations {
        inputs = inputs.activations(a);
    }
    if let Some(p) = &predictions {
        inputs = inputs.predictions(p);
    }
    if let Some(e) = &embeddings {
        inputs = inputs.ssl_embeddings(e);
    }
    if let Some(n) = args.pool_size {
        inputs = inputs.pool_size(n);
    }
    let batch = query(&inputs)?;
    warn_degenerate(batch.degenerate_draws);
    write_index_set(&args.out, &batch.selected)?;
    Ok(())
}

fn warn_degenerate(draws: usize) {
    if draws > 0 {
        eprintln!(
            "warning[degenerate-distances]: {draws} draw(s) had every candidate at distance zero and fell back to uniform selection"
        );
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Variance {
            predictions,
            clean,
            out,
        } => {
            let predictions = read_predictions(predictions)?;
            let variances = match clean {
                None => classwise_variance(&predictions)?,
                Some(path) => {
                    let clean = read_matrix(path)?;
                    let probs = ProbabilityMatrix::new(
                        clean.n_samples(),
                        clean.dim(),
                        clean.values().iter().map(|&v| f64::from(v)).collect(),
                    )?;
                    classwise_variance_with_clean(&predictions, &probs)?
                }
            };
            write_matrix(out, &variances.to_embedding_matrix())?;
        }
        Command::EmbedConsistency { model, out } => {
            let activations = read_embeddings(&model.activations)?;
            let variances = classwise_variance(&read_predictions(&model.predictions)?)?;
            let embedding = consistency_embedding(&activations, &variances)?;
            write_matrix(out, embedding.embeddings())?;
        }
        Command::EmbedBadge { model, out } => {
            let activations = read_embeddings(&model.activations)?;
            let probs = read_predictions(&model.predictions)?.mean_probabilities();
            write_matrix(out, &badge_gradient_embedding(&activations, &probs)?)?;
        }
        Command::Select(args) => select(args)?,
        Command::SelectInitial {
            embeddings,
            budget,
            seed,
            out,
        } => {
            let batch = initial_select(&read_embeddings(embeddings)?, *budget, *seed)?;
            warn_degenerate(batch.degenerate_draws);
            write_index_set(out, &batch.selected)?;
        }
        Command::Simulate { config, out } => {
            let config: SimConfig = read_json(config)?;
            write_json(out, &run_experiment(&config)?)?;
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return 0;
            }
            let err = CliError {
                code: "usage".into(),
                message: err
                    .render()
                    .to_string()
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim_start_matches("error: ")
                    .to_owned(),
                exit_code: 2,
            };
            eprintln!("{err}");
            return err.exit_code;
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code
        }
    }
}

/// Runs a parsed command, inside a dedicated thread pool when `--threads`
/// is given.
pub fn run_cli(cli: &Cli) -> Result<(), CliError> {
    match cli.threads {
        None => execute(&cli.command),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError {
                    code: "threads".into(),
                    message: e.to_string(),
                    exit_code: 1,
                })?;
            pool.install(|| execute(&cli.command))
        }
    }
}
