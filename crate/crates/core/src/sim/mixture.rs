use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

use super::SimConfig;

/// Synthetic labeled pool with a held-out test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train_features: EmbeddingMatrix,
    pub train_labels: Vec<usize>,
    pub test_features: EmbeddingMatrix,
    pub test_labels: Vec<usize>,
    /// Cluster centers, one row per class.
    pub centers: Vec<Vec<f64>>,
    pub n_classes: usize,
}

fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Isotropic Gaussian clusters with centers on the unit sphere.
///
/// Class sizes differ by at most one. A `label_noise` fraction of samples
/// gets its label replaced by a different, uniformly chosen class. The
/// first `train_fraction` of a random permutation forms the training pool.
pub fn generate_mixture(config: &SimConfig, seed: u64) -> Result<Dataset> {
    let (n, dim, classes) = (config.n_samples, config.dim, config.n_classes);
    if classes == 0 || dim == 0 {
        return Err(Error::Config("dim and n_classes must be positive".into()));
    }
    if classes > n {
        return Err(Error::Config(format!(
            "n_classes ({classes}) exceeds n_samples ({n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| random_unit_vector(dim, &mut rng))
        .collect();

    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut features = Vec::with_capacity(n * dim);
    for &label in &labels {
        for &c in &centers[label] {
            let noise: f64 = rng.sample(StandardNormal);
            features.push((c + config.cluster_spread * noise) as f32);
        }
    }

    let n_noisy = (config.label_noise * n as f64).round() as usize;
    if classes > 1 {
        for i in rand::seq::index::sample(&mut rng, n, n_noisy.min(n)) {
            let shift = rng.random_range(1..classes);
            labels[i] = (labels[i] + shift) % classes;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = config.n_train();
    let split = |idx: &[usize]| -> Result<(EmbeddingMatrix, Vec<usize>)> {
        let rows: Vec<&[f32]> = idx
            .iter()
            .map(|&i| &features[i * dim..(i + 1) * dim])
            .collect();
        Ok((
            EmbeddingMatrix::from_rows(&rows)?,
            idx.iter().map(|&i| labels[i]).collect(),
        ))
    };
    let (train_features, train_labels) = split(&order[..n_train])?;
    let (test_features, test_labels) = split(&order[n_train..])?;
    Ok(Dataset {
        train_features,
        train_labels,
        test_features,
        test_labels,
        centers,
        n_classes: classes,
    })
}

/// Index of the nearest center; ties go to the lower class.
pub fn nearest_center(centers: &[Vec<f64>], x: &[f32]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d: f64 = center
            .iter()
            .zip(x)
            .map(|(&a, &b)| (a - f64::from(b)).powi(2))
            .sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}
