//! Query strategies: each one maps a pool, its labeled subset and the
//! model outputs to a batch of indices to label next.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diversity::{select_batch, Batch};
use crate::embedding::{
    badge_gradient_embedding, classwise_variance, consistency_embedding, consistency_scores,
    entropy_scores,
};
use crate::error::{Error, Result};
use crate::model::{
    EmbeddingMatrix, IndexSet, PredictionTensor, Strategy, StrategyConfig, Temperature,
};

/// Everything a strategy may read. Which inputs are required depends on the
/// strategy; see [`Strategy::needs_activations`] and friends.
#[derive(Debug, Clone)]
pub struct QueryInputs<'a> {
    pub activations: Option<&'a EmbeddingMatrix>,
    pub predictions: Option<&'a PredictionTensor>,
    pub ssl_embeddings: Option<&'a EmbeddingMatrix>,
    pub labeled: IndexSet,
    /// Pool size when no input tensor is given (random strategy only).
    pub pool_size: Option<usize>,
    pub config: StrategyConfig,
}

impl<'a> QueryInputs<'a> {
    pub fn new(config: StrategyConfig) -> Self {
        Self {
            activations: None,
            predictions: None,
            ssl_embeddings: None,
            labeled: IndexSet::new(),
            pool_size: None,
            config,
        }
    }

    pub fn activations(mut self, activations: &'a EmbeddingMatrix) -> Self {
        self.activations = Some(activations);
        self
    }

    pub fn predictions(mut self, predictions: &'a PredictionTensor) -> Self {
        self.predictions = Some(predictions);
        self
    }

    pub fn ssl_embeddings(mut self, embeddings: &'a EmbeddingMatrix) -> Self {
        self.ssl_embeddings = Some(embeddings);
        self
    }

    pub fn labeled(mut self, labeled: IndexSet) -> Self {
        self.labeled = labeled;
        self
    }

    pub fn pool_size(mut self, n: usize) -> Self {
        self.pool_size = Some(n);
        self
    }

    /// Number of samples in the pool; every provided input must agree.
    fn resolve_pool_size(&self) -> Result<usize> {
        let sizes = [
            (
                "activations",
                self.activations.map(EmbeddingMatrix::n_samples),
            ),
            (
                "predictions",
                self.predictions.map(PredictionTensor::n_samples),
            ),
            (
                "ssl embeddings",
                self.ssl_embeddings.map(EmbeddingMatrix::n_samples),
            ),
        ];
        let mut resolved = self.pool_size;
        for (what, size) in sizes {
            match (resolved, size) {
                (Some(expected), Some(actual)) if expected != actual => {
                    return Err(Error::ShapeMismatch {
                        what,
                        expected,
                        actual,
                    })
                }
                (None, Some(_)) => resolved = size,
                _ => {}
            }
        }
        resolved.ok_or(Error::MissingInput {
            strategy: self.config.strategy.name(),
            input: "a pool size or an input tensor",
        })
    }

    fn require_activations(&self) -> Result<&'a EmbeddingMatrix> {
        self.activations.ok_or(Error::MissingInput {
            strategy: self.config.strategy.name(),
            input: "activations",
        })
    }

    fn require_predictions(&self) -> Result<&'a PredictionTensor> {
        self.predictions.ok_or(Error::MissingInput {
            strategy: self.config.strategy.name(),
            input: "predictions",
        })
    }

    fn require_ssl_embeddings(&self) -> Result<&'a EmbeddingMatrix> {
        self.ssl_embeddings.ok_or(Error::MissingInput {
            strategy: self.config.strategy.name(),
            input: "embeddings",
        })
    }
}

/// Runs the configured strategy and returns `budget` unlabeled indices.
pub fn query(inputs: &QueryInputs<'_>) -> Result<Batch> {
    let config = &inputs.config;
    let strategy = config.strategy;
    // missing inputs are reported before shape problems
    if strategy.needs_activations() {
        inputs.require_activations()?;
    }
    if strategy.needs_predictions() {
        inputs.require_predictions()?;
    }
    if strategy.needs_ssl_embeddings() {
        inputs.require_ssl_embeddings()?;
    }
    let n = inputs.resolve_pool_size()?;
    let labeled = &inputs.labeled;
    labeled.check_bounds(n)?;
    config.check_budget(n, labeled.len())?;
    let budget = config.budget;

    match strategy {
        Strategy::Random => {
            let unlabeled = labeled.complement(n);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let picks = rand::seq::index::sample(&mut rng, unlabeled.len(), budget);
            plain(picks.into_iter().map(|p| unlabeled[p]).collect())
        }
        Strategy::MaxEntropy => {
            let scores = entropy_scores(inputs.require_predictions()?);
            plain(top_k(&scores, labeled, budget))
        }
        Strategy::ConsistencyTopk => {
            let variances = classwise_variance(inputs.require_predictions()?)?;
            plain(top_k(&consistency_scores(&variances), labeled, budget))
        }
        Strategy::Coreset => select_batch(
            inputs.require_activations()?,
            labeled,
            budget,
            Temperature::Greedy,
            config.seed,
        ),
        Strategy::Badge => {
            let unlabeled = labeled.complement(n);
            let activations = inputs.require_activations()?.select_rows(&unlabeled)?;
            let probs = inputs
                .require_predictions()?
                .select_samples(&unlabeled)?
                .mean_probabilities();
            let gradients = badge_gradient_embedding(&activations, &probs)?;
            let batch = select_batch(
                &gradients,
                &IndexSet::new(),
                budget,
                Temperature::KMEANS_PP,
                config.seed,
            )?;
            remap(batch, &unlabeled)
        }
        Strategy::ConsistencyEmbedding => {
            let variances = classwise_variance(inputs.require_predictions()?)?;
            let embedding = consistency_embedding(inputs.require_activations()?, &variances)?;
            if config.seed_from_labeled {
                select_batch(
                    embedding.embeddings(),
                    labeled,
                    budget,
                    config.temperature,
                    config.seed,
                )
            } else {
                let unlabeled = labeled.complement(n);
                let rows = embedding.embeddings().select_rows(&unlabeled)?;
                let batch = select_batch(
                    &rows,
                    &IndexSet::new(),
                    budget,
                    config.temperature,
                    config.seed,
                )?;
                remap(batch, &unlabeled)
            }
        }
        Strategy::InitialDiversity => {
            let unlabeled = labeled.complement(n);
            let rows = inputs.require_ssl_embeddings()?.select_rows(&unlabeled)?;
            remap(initial_select(&rows, budget, config.seed)?, &unlabeled)
        }
    }
}

/// Picks an initial labeled set with k-means++ seeding (`T = 0.5`) over
/// self-supervised embeddings.
pub fn initial_select(ssl_embeddings: &EmbeddingMatrix, budget: usize, seed: u64) -> Result<Batch> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    select_batch(
        ssl_embeddings,
        &IndexSet::new(),
        budget,
        Temperature::KMEANS_PP,
        seed,
    )
}

/// Indices of the `k` highest unlabeled scores; ties go to the lower index.
fn top_k(scores: &[f64], labeled: &IndexSet, k: usize) -> Vec<usize> {
    let mut candidates = labeled.complement(scores.len());
    candidates.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    candidates.truncate(k);
    candidates
}

fn plain(indices: Vec<usize>) -> Result<Batch> {
    Ok(Batch {
        selected: IndexSet::from_indices(indices)?,
        degenerate_draws: 0,
    })
}

/// Maps indices into a row subset back to pool indices.
fn remap(batch: Batch, rows: &[usize]) -> Result<Batch> {
    Ok(Batch {
        selected: IndexSet::from_indices(batch.selected.iter().map(|i| rows[i]).collect())?,
        degenerate_draws: batch.degenerate_draws,
    })
}
