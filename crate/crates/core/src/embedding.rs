//! Embedding spaces and per-sample scores consumed by the query strategies.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, PredictionTensor, ProbabilityMatrix, VarianceMatrix};

fn check_samples(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Unbiased variance (divisor `n - 1`), two-pass. Observations are summed in
/// ascending order so the result does not depend on their order.
fn sample_variance(observations: &mut [f64]) -> f64 {
    observations.sort_unstable_by(f64::total_cmp);
    let n = observations.len() as f64;
    let mean = observations.iter().sum::<f64>() / n;
    observations
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1.0)
}

/// Class-wise variance of the predictions over the K augmented copies of
/// each sample.
pub fn classwise_variance(predictions: &PredictionTensor) -> Result<VarianceMatrix> {
    variance_impl(predictions, None)
}

/// Same as [`classwise_variance`] with the prediction on the unaugmented
/// sample included as an extra observation (K + 1 in total).
pub fn classwise_variance_with_clean(
    predictions: &PredictionTensor,
    clean: &ProbabilityMatrix,
) -> Result<VarianceMatrix> {
    check_samples(
        "clean predictions (samples)",
        predictions.n_samples(),
        clean.n_samples(),
    )?;
    check_samples(
        "clean predictions (classes)",
        predictions.n_classes(),
        clean.n_classes(),
    )?;
    variance_impl(predictions, Some(clean))
}

fn variance_impl(
    predictions: &PredictionTensor,
    clean: Option<&ProbabilityMatrix>,
) -> Result<VarianceMatrix> {
    let [n, k, c] = predictions.dims();
    if k < 2 {
        return Err(Error::TooFewAugmentations { augmentations: k });
    }
    let mut values = vec![0.0f64; n * c];
    values.par_chunks_mut(c).enumerate().for_each(|(i, out)| {
        let sample = predictions.sample(i);
        let mut column = Vec::with_capacity(k + 1);
        for (class, var) in out.iter_mut().enumerate() {
            column.clear();
            column.extend((0..k).map(|aug| f64::from(sample[aug * c + class])));
            if let Some(clean) = clean {
                column.push(clean.row(i)[class]);
            }
            *var = sample_variance(&mut column);
        }
    });
    VarianceMatrix::new(n, c, values)
}

/// Activations scaled row-wise by the summed class-wise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyEmbedding {
    base: EmbeddingMatrix,
    scale: Vec<f64>,
}

impl ConsistencyEmbedding {
    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.base
    }

    pub fn into_embeddings(self) -> EmbeddingMatrix {
        self.base
    }

    /// Per-sample scale factor `Σ_c σ²_{i,c}`.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

/// `z_i = (Σ_c σ²_{i,c}) · v_i`. The norm of `z_i` is the summed variance
/// times the norm of `v_i`, so inconsistent samples sit far from the origin.
pub fn consistency_embedding(
    activations: &EmbeddingMatrix,
    variances: &VarianceMatrix,
) -> Result<ConsistencyEmbedding> {
    check_samples("variances", activations.n_samples(), variances.n_samples())?;
    let scale = consistency_scores(variances);
    let dim = activations.dim();
    let mut values = vec![0.0f32; activations.values().len()];
    values
        .par_chunks_mut(dim)
        .zip(activations.values().par_chunks(dim))
        .zip(scale.par_iter())
        .for_each(|((out, v), &s)| {
            for (o, &x) in out.iter_mut().zip(v) {
                *o = (s * f64::from(x)) as f32;
            }
        });
    Ok(ConsistencyEmbedding {
        base: EmbeddingMatrix::new(activations.n_samples(), dim, values)?,
        scale,
    })
}

/// Summed class-wise variance per sample.
pub fn consistency_scores(variances: &VarianceMatrix) -> Vec<f64> {
    (0..variances.n_samples())
        .map(|i| variances.row(i).iter().sum())
        .collect()
}

/// Shannon entropy (nats) of the augmentation-averaged prediction.
pub fn entropy_scores(predictions: &PredictionTensor) -> Vec<f64> {
    let mean = predictions.mean_probabilities();
    (0..mean.n_samples())
        .map(|i| {
            -mean
                .row(i)
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * p.ln())
                .sum::<f64>()
        })
        .collect()
}

/// Most probable class; ties go to the lowest class index.
pub fn pseudo_label(probs: &[f64]) -> usize {
    probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(best, bp), (c, &p)| {
            if p > bp {
                (c, p)
            } else {
                (best, bp)
            }
        })
        .0
}

/// Gradient of the cross-entropy loss with respect to the output-layer
/// weights, taking the predicted class as label.
///
/// Row `i` is laid out class-major: block `c` (length d) holds
/// `(p̄_{i,c} - [c = ŷ_i]) · v_i`.
pub fn badge_gradient_embedding(
    activations: &EmbeddingMatrix,
    mean_probs: &ProbabilityMatrix,
) -> Result<EmbeddingMatrix> {
    check_samples(
        "mean probabilities",
        activations.n_samples(),
        mean_probs.n_samples(),
    )?;
    let (dim, classes) = (activations.dim(), mean_probs.n_classes());
    let width = dim * classes;
    let mut values = vec![0.0f32; activations.n_samples() * width];
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, out)| {
            let probs = mean_probs.row(i);
            let label = pseudo_label(probs);
            let v = activations.row(i);
            for (c, block) in out.chunks_exact_mut(dim).enumerate() {
                let coef = probs[c] - if c == label { 1.0 } else { 0.0 };
                for (o, &x) in block.iter_mut().zip(v) {
                    *o = (coef * f64::from(x)) as f32;
                }
            }
        });
    EmbeddingMatrix::new(activations.n_samples(), width, values)
}
