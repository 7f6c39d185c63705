use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity::covering_radius;
use crate::error::Result;
use crate::model::{EmbeddingMatrix, IndexSet, Strategy, StrategyConfig};
use crate::strategy::{initial_select, query, QueryInputs};

use super::learner::{simulate_predictions, train_learner, SoftmaxRegression};
use super::mixture::{generate_mixture, Dataset};
use super::SimConfig;

/// How the first labeled set is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSelection {
    Random,
    /// k-means++ seeding on the feature vectors, which stand in for
    /// self-supervised embeddings.
    InitialDiversity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// 0 is the model trained on the initial set.
    pub cycle: usize,
    pub labeled_count: usize,
    pub test_accuracy: f64,
    /// Largest distance from a training-pool sample to its nearest labeled sample.
    pub covering_radius: f64,
    /// Indices (into the training pool) labeled in this cycle.
    pub selected: Vec<usize>,
    pub degenerate_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub initial_selection: InitialSelection,
    pub seed: u64,
    pub cycles: Vec<CycleRecord>,
}

/// Mean and standard error over seeds for one (initial selection,
/// strategy, cycle) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub strategy: Strategy,
    pub initial_selection: InitialSelection,
    pub cycle: usize,
    pub labeled_count: usize,
    pub mean_accuracy: f64,
    pub stderr_accuracy: f64,
    pub mean_covering_radius: f64,
    pub stderr_covering_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlExperimentReport {
    pub config: SimConfig,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

impl AlExperimentReport {
    pub fn runs_for(
        &self,
        initial_selection: InitialSelection,
        strategy: Strategy,
    ) -> impl Iterator<Item = &RunRecord> {
        self.runs
            .iter()
            .filter(move |r| r.initial_selection == initial_selection && r.strategy == strategy)
    }

    pub fn aggregate(
        &self,
        initial_selection: InitialSelection,
        strategy: Strategy,
        cycle: usize,
    ) -> Option<&AggregateRecord> {
        self.aggregates.iter().find(|a| {
            a.initial_selection == initial_selection && a.strategy == strategy && a.cycle == cycle
        })
    }
}

/// Sample standard deviation (divisor n − 1) over √n; zero for fewer than
/// two values.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Independent generator streams derived from one seed (SplitMix64 finalizer).
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INITIAL: u64 = 1;
const STREAM_QUERY: u64 = 1 << 16;
const STREAM_AUGMENT: u64 = 2 << 16;

fn strategy_stream(base: u64, strategy: Strategy, cycle: usize) -> u64 {
    let position = Strategy::ALL.iter().position(|&s| s == strategy).unwrap() as u64;
    base + position * 256 + cycle as u64
}

struct Learning<'a> {
    config: &'a SimConfig,
    data: &'a Dataset,
}

impl Learning<'_> {
    fn fit(&self, labeled: &IndexSet) -> Result<SoftmaxRegression> {
        let features = self.data.train_features.select_rows(labeled.as_slice())?;
        let labels: Vec<usize> = labeled.iter().map(|i| self.data.train_labels[i]).collect();
        train_learner(
            &features,
            &labels,
            self.data.n_classes,
            &self.config.learner,
        )
    }

    fn record(
        &self,
        cycle: usize,
        labeled: &IndexSet,
        model: &SoftmaxRegression,
        selected: &IndexSet,
        degenerate_draws: usize,
    ) -> Result<CycleRecord> {
        Ok(CycleRecord {
            cycle,
            labeled_count: labeled.len(),
            test_accuracy: model.accuracy(&self.data.test_features, &self.data.test_labels),
            covering_radius: covering_radius(&self.data.train_features, labeled)?,
            selected: selected.as_slice().to_vec(),
            degenerate_draws,
        })
    }

    fn initial_set(&self, mode: InitialSelection, seed: u64) -> Result<IndexSet> {
        let pool = &self.data.train_features;
        let budget = self.config.initial_budget;
        let seed = derive_seed(seed, STREAM_INITIAL);
        match mode {
            InitialSelection::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let picks = rand::seq::index::sample(&mut rng, pool.n_samples(), budget);
                IndexSet::from_indices(picks.into_vec())
            }
            InitialSelection::InitialDiversity => Ok(initial_select(pool, budget, seed)?.selected),
        }
    }

    fn run_strategy(
        &self,
        strategy: Strategy,
        seed: u64,
        initial: &IndexSet,
        initial_model: &SoftmaxRegression,
        first: &CycleRecord,
    ) -> Result<Vec<CycleRecord>> {
        let features: &EmbeddingMatrix = &self.data.train_features;
        let mut labeled = initial.clone();
        let mut model = initial_model.clone();
        let mut cycles = vec![first.clone()];
        for (c, &budget) in self.config.cycle_budgets.iter().enumerate() {
            let cycle = c + 1;
            let predictions = if strategy.needs_predictions() {
                Some(simulate_predictions(
                    &model,
                    features,
                    self.config.n_augmentations,
                    self.config.augmentation_noise,
                    derive_seed(seed, strategy_stream(STREAM_AUGMENT, strategy, cycle)),
                )?)
            } else {
                None
            };
            let query_config = StrategyConfig {
                temperature: self.config.temperature,
                ..StrategyConfig::new(
                    strategy,
                    budget,
                    derive_seed(seed, strategy_stream(STREAM_QUERY, strategy, cycle)),
                )
            };
            let mut inputs = QueryInputs::new(query_config)
                .activations(features)
                .labeled(labeled.clone());
            if let Some(p) = &predictions {
                inputs = inputs.predictions(p);
            }
            let batch = query(&inputs)?;
            labeled.extend_from(&batch.selected)?;
            model = self.fit(&labeled)?;
            cycles.push(self.record(
                cycle,
                &labeled,
                &model,
                &batch.selected,
                batch.degenerate_draws,
            )?);
        }
        Ok(cycles)
    }

    fn run_seed(&self, seed: u64) -> Result<Vec<RunRecord>> {
        let mut runs = Vec::new();
        for &mode in &self.config.initial_selections {
            let initial = self.initial_set(mode, seed)?;
            let model = self.fit(&initial)?;
            let first = self.record(0, &initial, &model, &initial, 0)?;
            for &strategy in &self.config.strategies {
                runs.push(RunRecord {
                    strategy,
                    initial_selection: mode,
                    seed,
                    cycles: self.run_strategy(strategy, seed, &initial, &model, &first)?,
                });
            }
        }
        Ok(runs)
    }
}

fn aggregate(config: &SimConfig, runs: &[RunRecord]) -> Vec<AggregateRecord> {
    let mut out = Vec::new();
    for &mode in &config.initial_selections {
        for &strategy in &config.strategies {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.initial_selection == mode && r.strategy == strategy)
                .collect();
            for cycle in 0..=config.cycle_budgets.len() {
                let acc: Vec<f64> = cell.iter().map(|r| r.cycles[cycle].test_accuracy).collect();
                let radius: Vec<f64> = cell
                    .iter()
                    .map(|r| r.cycles[cycle].covering_radius)
                    .collect();
                out.push(AggregateRecord {
                    strategy,
                    initial_selection: mode,
                    cycle,
                    labeled_count: cell[0].cycles[cycle].labeled_count,
                    mean_accuracy: mean(&acc),
                    stderr_accuracy: standard_error(&acc),
                    mean_covering_radius: mean(&radius),
                    stderr_covering_radius: standard_error(&radius),
                });
            }
        }
    }
    out
}

/// Runs every (seed, initial selection, strategy) combination.
///
/// Seeds are processed in parallel; each run is sequential and the result
/// order follows the configuration, so the report does not depend on the
/// number of worker threads.
pub fn run_experiment(config: &SimConfig) -> Result<AlExperimentReport> {
    config.validate()?;
    let per_seed: Vec<Vec<RunRecord>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = generate_mixture(config, seed)?;
            Learning {
                config,
                data: &data,
            }
            .run_seed(seed)
        })
        .collect::<Result<_>>()?;
    let runs: Vec<RunRecord> = per_seed.into_iter().flatten().collect();
    Ok(AlExperimentReport {
        aggregates: aggregate(config, &runs),
        config: config.clone(),
        runs,
    })
}
