//! Desk-scale active-learning simulation: Gaussian-mixture pools, a linear
//! softmax learner, noisy-copy "augmentations" and the multi-cycle
//! query → label → retrain loop.

mod experiment;
mod learner;
mod mixture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Strategy, Temperature};

pub use experiment::{
    run_experiment, standard_error, AggregateRecord, AlExperimentReport, CycleRecord,
    InitialSelection, RunRecord,
};
pub use learner::{
    simulate_predictions, softmax_in_place, train_learner, train_learner_with_history,
    LearnerConfig, SoftmaxRegression,
};
pub use mixture::{generate_mixture, nearest_center, Dataset};

/// Experiment description, read from and written to JSON. Missing fields
/// take the defaults of [`SimConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_samples: usize,
    pub dim: usize,
    pub n_classes: usize,
    /// Standard deviation of each cluster around its unit-norm center.
    pub cluster_spread: f64,
    pub label_noise: f64,
    pub train_fraction: f64,
    pub initial_budget: usize,
    pub cycle_budgets: Vec<usize>,
    pub n_augmentations: usize,
    /// Standard deviation of the feature noise defining one augmented copy.
    pub augmentation_noise: f64,
    pub strategies: Vec<Strategy>,
    pub initial_selections: Vec<InitialSelection>,
    /// Temperature of the consistency-embedding strategy.
    pub temperature: Temperature,
    pub seeds: Vec<u64>,
    pub learner: LearnerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            dim: 8,
            n_classes: 8,
            cluster_spread: 0.3,
            label_noise: 0.0,
            train_fraction: 0.9,
            initial_budget: 40,
            cycle_budgets: vec![40, 40, 40],
            n_augmentations: 10,
            augmentation_noise: 0.3,
            strategies: vec![
                Strategy::Random,
                Strategy::MaxEntropy,
                Strategy::ConsistencyTopk,
                Strategy::Coreset,
                Strategy::Badge,
                Strategy::ConsistencyEmbedding,
            ],
            initial_selections: vec![InitialSelection::Random, InitialSelection::InitialDiversity],
            temperature: Temperature::KMEANS_PP,
            seeds: (0..10).collect(),
            learner: LearnerConfig::default(),
        }
    }
}

impl SimConfig {
    /// Size of the training pool.
    pub fn n_train(&self) -> usize {
        (self.n_samples as f64 * self.train_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_classes == 0 || self.dim == 0 {
            return fail("dim and n_classes must be positive".into());
        }
        if self.n_classes > self.n_samples {
            return fail(format!(
                "n_classes ({}) exceeds n_samples ({})",
                self.n_classes, self.n_samples
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        let n_train = self.n_train();
        if n_train == 0 || n_train == self.n_samples {
            return fail("train/test split leaves an empty side".into());
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return fail(format!(
                "label_noise must lie in [0, 1], got {}",
                self.label_noise
            ));
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread >= 0.0) {
            return fail(format!(
                "cluster_spread must be ≥ 0, got {}",
                self.cluster_spread
            ));
        }
        if !(self.augmentation_noise.is_finite() && self.augmentation_noise >= 0.0) {
            return fail(format!(
                "augmentation_noise must be ≥ 0, got {}",
                self.augmentation_noise
            ));
        }
        if self.n_augmentations < 2 {
            return Err(Error::TooFewAugmentations {
                augmentations: self.n_augmentations,
            });
        }
        if self.initial_budget == 0 || self.cycle_budgets.contains(&0) {
            return Err(Error::ZeroBudget);
        }
        let total = self.initial_budget + self.cycle_budgets.iter().sum::<usize>();
        if total > n_train {
            return Err(Error::BudgetTooLarge {
                budget: total,
                available: n_train,
            });
        }
        if self.strategies.is_empty() || self.initial_selections.is_empty() || self.seeds.is_empty()
        {
            return fail("strategies, initial_selections and seeds must be non-empty".into());
        }
        if self.strategies.contains(&Strategy::InitialDiversity) {
            return fail("initial-diversity is an initial selection, not a cycle strategy".into());
        }
        self.temperature.check()?;
        Ok(())
    }
}
