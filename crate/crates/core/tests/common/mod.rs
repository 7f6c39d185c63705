#![allow(dead_code)]

use alsel_core::{EmbeddingMatrix, PredictionTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, d: usize, rng: &mut impl Rng) -> EmbeddingMatrix {
    let values = (0..n * d)
        .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
        .collect();
    EmbeddingMatrix::new(n, d, values).unwrap()
}

/// Random probability tensor: softmax of Gaussian logits with per-sample scale.
pub fn random_predictions(n: usize, k: usize, c: usize, rng: &mut impl Rng) -> PredictionTensor {
    let mut values = Vec::with_capacity(n * k * c);
    for _ in 0..n {
        let center: Vec<f64> = (0..c)
            .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let jitter = rng.random::<f64>() * 2.0;
        for _ in 0..k {
            let logits: Vec<f64> = center
                .iter()
                .map(|m| m + jitter * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
            let total: f64 = exp.iter().sum();
            values.extend(exp.iter().map(|e| (e / total) as f32));
        }
    }
    PredictionTensor::new(n, k, c, values).unwrap()
}

/// Straight double loop, no incremental state.
pub fn brute_force_min_distances(m: &EmbeddingMatrix, selected: &[usize]) -> Vec<f64> {
    (0..m.n_samples())
        .map(|i| {
            selected
                .iter()
                .map(|&j| {
                    let mut s = 0.0f64;
                    for t in 0..m.dim() {
                        let diff = m.row(i)[t] as f64 - m.row(j)[t] as f64;
                        s += diff * diff;
                    }
                    s.sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// All k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Optimal discrete k-center radius by exhaustive search.
pub fn optimal_k_center_radius(m: &EmbeddingMatrix, k: usize) -> f64 {
    combinations(m.n_samples(), k)
        .iter()
        .map(|centers| {
            brute_force_min_distances(m, centers)
                .into_iter()
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Squared Euclidean distance, computed without any library helper.
pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum()
}

/// Probability of drawing the ordered trajectory `path` under k-means++
/// seeding (uniform first pick, then D² weighting), computed directly from
/// squared distances.
pub fn kmeans_pp_trajectory_probability(m: &EmbeddingMatrix, path: &[usize]) -> f64 {
    let n = m.n_samples();
    let mut p = 1.0 / n as f64;
    for step in 1..path.len() {
        let chosen = &path[..step];
        let d2: Vec<f64> = (0..n)
            .map(|i| {
                chosen
                    .iter()
                    .map(|&j| squared_distance(m.row(i), m.row(j)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        p *= d2[path[step]] / total;
    }
    p
}

/// All ordered trajectories of length `b` without repetition.
pub fn permutations(n: usize, b: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for subset in combinations(n, b) {
        permute(0, &mut subset.clone(), &mut out);
    }
    out
}

fn permute(start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if start == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in start..cur.len() {
        cur.swap(start, i);
        permute(start + 1, cur, out);
        cur.swap(start, i);
    }
}
