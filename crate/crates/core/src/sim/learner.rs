//! Multinomial logistic regression trained by full-batch gradient descent,
//! plus the noisy-copy prediction simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, PredictionTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.5,
            l2_penalty: 1e-3,
        }
    }
}

/// Linear softmax classifier.
///
/// Parameters are stored flat: the C×d weight matrix row-major, then the C
/// biases. The L2 penalty applies to the weights only.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxRegression {
    dim: usize,
    n_classes: usize,
    params: Vec<f64>,
}

pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        total += *z;
    }
    logits.iter_mut().for_each(|z| *z /= total);
}

impl SoftmaxRegression {
    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        Self {
            dim,
            n_classes,
            params: vec![0.0; n_classes * (dim + 1)],
        }
    }

    pub fn from_params(dim: usize, n_classes: usize, params: Vec<f64>) -> Result<Self> {
        let expected = n_classes * (dim + 1);
        if params.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: params.len(),
            });
        }
        Ok(Self {
            dim,
            n_classes,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn weights(&self) -> &[f64] {
        &self.params[..self.n_classes * self.dim]
    }

    fn bias(&self) -> &[f64] {
        &self.params[self.n_classes * self.dim..]
    }

    pub fn logits(&self, x: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
        self.weights()
            .chunks_exact(self.dim)
            .zip(self.bias())
            .map(|(w, &b)| b + w.iter().zip(x.clone()).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    pub fn predict_proba(&self, x: &[f32]) -> Vec<f64> {
        let mut p = self.logits(x.iter().map(|&v| f64::from(v)));
        softmax_in_place(&mut p);
        p
    }

    pub fn predict(&self, x: &[f32]) -> usize {
        crate::embedding::pseudo_label(&self.logits(x.iter().map(|&v| f64::from(v))))
    }

    pub fn accuracy(&self, features: &EmbeddingMatrix, labels: &[usize]) -> f64 {
        let correct = features
            .rows()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / labels.len() as f64
    }

    /// Mean cross-entropy plus `l2/2 · ‖W‖²`.
    pub fn objective(&self, features: &EmbeddingMatrix, labels: &[usize], l2: f64) -> f64 {
        self.objective_and_gradient(features, labels, l2).0
    }

    /// Objective and its gradient with respect to the flat parameters.
    pub fn objective_and_gradient(
        &self,
        features: &EmbeddingMatrix,
        labels: &[usize],
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let (d, c) = (self.dim, self.n_classes);
        let n = labels.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (x, &y) in features.rows().zip(labels) {
            let mut p = self.predict_proba(x);
            loss -= p[y].max(f64::MIN_POSITIVE).ln();
            p[y] -= 1.0;
            for (class, &r) in p.iter().enumerate() {
                let row = &mut grad[class * d..(class + 1) * d];
                for (g, &xv) in row.iter_mut().zip(x) {
                    *g += r * f64::from(xv);
                }
                grad[c * d + class] += r;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        let weights = self.weights();
        let penalty = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
        for (g, &w) in grad.iter_mut().zip(weights) {
            *g += l2 * w;
        }
        (loss / n + penalty, grad)
    }
}

/// Fits a softmax regression on the labeled subset, starting from zero
/// weights. Returns the model and the objective after every epoch.
pub fn train_learner_with_history(
    features: &EmbeddingMatrix,
    labels: &[usize],
    n_classes: usize,
    config: &LearnerConfig,
) -> Result<(SoftmaxRegression, Vec<f64>)> {
    if labels.is_empty() {
        return Err(Error::EmptySelection);
    }
    if features.n_samples() != labels.len() {
        return Err(Error::ShapeMismatch {
            what: "labels",
            expected: features.n_samples(),
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: n_classes,
        });
    }
    let mut model = SoftmaxRegression::zeros(features.dim(), n_classes);
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, grad) = model.objective_and_gradient(features, labels, config.l2_penalty);
        history.push(loss);
        for (p, g) in model.params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Ok((model, history))
}

pub fn train_learner(
    features: &EmbeddingMatrix,
    labels: &[usize],
    n_classes: usize,
    config: &LearnerConfig,
) -> Result<SoftmaxRegression> {
    Ok(train_learner_with_history(features, labels, n_classes, config)?.0)
}

/// Model outputs on K noisy copies of every sample, the copies drawn as
/// `x + ε`, `ε ~ N(0, noise² I)`.
pub fn simulate_predictions(
    model: &SoftmaxRegression,
    features: &EmbeddingMatrix,
    n_augmentations: usize,
    noise: f64,
    seed: u64,
) -> Result<PredictionTensor> {
    if n_augmentations < 2 {
        return Err(Error::TooFewAugmentations {
            augmentations: n_augmentations,
        });
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Config(format!(
            "augmentation noise must be ≥ 0, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = model.n_classes();
    let mut values = Vec::with_capacity(features.n_samples() * n_augmentations * c);
    let mut copy = vec![0.0f64; features.dim()];
    for x in features.rows() {
        for _ in 0..n_augmentations {
            for (dst, &src) in copy.iter_mut().zip(x) {
                let eps: f64 = rng.sample(StandardNormal);
                *dst = f64::from(src) + noise * eps;
            }
            let mut p = model.logits(copy.iter().copied());
            softmax_in_place(&mut p);
            values.extend(p.iter().map(|&v| v as f32));
        }
    }
    PredictionTensor::new(features.n_samples(), n_augmentations, c, values)
}
