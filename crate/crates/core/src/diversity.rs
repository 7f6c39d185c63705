//! Temperature-generalized diversity sampling.
//!
//! Every candidate `i` carries `d_i`, the L2 distance to its nearest selected
//! sample. The next sample is drawn with probability proportional to
//! `d_i^(1/T)`: `T = 0.5` is k-means++ seeding, `T = 1` is distance-weighted
//! sampling and the `T → 0⁺` limit is k-center greedy (farthest point first).
//! Distances are maintained incrementally, one O(N·d) pass per insertion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, IndexSet, Temperature};

/// Below this many scalar ops a distance pass runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 15;

/// L2 distance between two rows, accumulated in double precision.
#[inline]
pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = f64::from(x) - f64::from(y);
            diff * diff
        })
        .sum::<f64>()
        .sqrt()
}

fn relax(embeddings: &EmbeddingMatrix, center: usize, min_dist: &mut [f64]) {
    let point = embeddings.row(center);
    let update = |(i, d): (usize, &mut f64)| {
        let dist = l2_distance(embeddings.row(i), point);
        if dist < *d {
            *d = dist;
        }
    };
    if embeddings.n_samples() * embeddings.dim() >= PARALLEL_THRESHOLD {
        min_dist.par_iter_mut().enumerate().for_each(update);
    } else {
        min_dist.iter_mut().enumerate().for_each(update);
    }
    // a point is always at distance zero from itself
    min_dist[center] = 0.0;
}

/// Distance from every sample to its nearest member of `selected`.
pub fn min_distances(embeddings: &EmbeddingMatrix, selected: &IndexSet) -> Result<Vec<f64>> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    selected.check_bounds(embeddings.n_samples())?;
    let mut min_dist = vec![f64::INFINITY; embeddings.n_samples()];
    for center in selected {
        relax(embeddings, center, &mut min_dist);
    }
    Ok(min_dist)
}

/// Largest distance from any sample to its nearest member of `selected`.
pub fn covering_radius(embeddings: &EmbeddingMatrix, selected: &IndexSet) -> Result<f64> {
    Ok(min_distances(embeddings, selected)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Normalized selection probabilities `d_i^(1/T) / Σ_j d_j^(1/T)`.
///
/// Evaluated in the log domain relative to the largest distance, so extreme
/// distances and small temperatures neither overflow nor underflow to an
/// all-zero vector. Zero distances get probability exactly zero.
pub fn selection_probabilities(min_dist: &[f64], temperature: f64) -> Result<Vec<f64>> {
    Temperature::finite(temperature)?;
    if let Some((index, &value)) = min_dist
        .iter()
        .enumerate()
        .find(|(_, d)| !(d.is_finite() && **d >= 0.0))
    {
        return Err(Error::InvalidDistance { index, value });
    }
    let max_log = min_dist
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|d| d.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if max_log == f64::NEG_INFINITY {
        return Err(Error::DegenerateDistances);
    }
    let inv_t = temperature.recip();
    let mut weights: Vec<f64> = min_dist
        .iter()
        .map(|&d| {
            if d > 0.0 {
                ((d.ln() - max_log) * inv_t).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Outcome of one draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub index: usize,
    /// Every unselected candidate sat at distance zero, so the index was
    /// taken uniformly (finite temperature) or as the first candidate (greedy).
    pub degenerate: bool,
}

/// Selected set, the minimum-distance vector it induces and the generator
/// driving the draws.
#[derive(Debug, Clone)]
pub struct SelectionState<'a> {
    embeddings: &'a EmbeddingMatrix,
    selected: IndexSet,
    /// `None` while nothing is selected.
    min_dist: Option<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl<'a> SelectionState<'a> {
    pub fn new(embeddings: &'a EmbeddingMatrix, seed: u64) -> Self {
        Self {
            embeddings,
            selected: IndexSet::new(),
            min_dist: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Starts from an already selected set (e.g. the labeled pool).
    pub fn with_selected(
        embeddings: &'a EmbeddingMatrix,
        selected: &IndexSet,
        seed: u64,
    ) -> Result<Self> {
        let mut state = Self::new(embeddings, seed);
        if !selected.is_empty() {
            state.min_dist = Some(min_distances(embeddings, selected)?);
            state.selected = selected.clone();
        }
        Ok(state)
    }

    pub fn selected(&self) -> &IndexSet {
        &self.selected
    }

    pub fn into_selected(self) -> IndexSet {
        self.selected
    }

    /// `None` while the selected set is empty.
    pub fn min_distances(&self) -> Option<&[f64]> {
        self.min_dist.as_deref()
    }

    pub fn n_unselected(&self) -> usize {
        self.embeddings.n_samples() - self.selected.len()
    }

    /// Adds `index` to the selected set and folds its distances into the
    /// minimum-distance vector.
    pub fn insert(&mut self, index: usize) -> Result<()> {
        let n = self.embeddings.n_samples();
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        self.selected.push(index)?;
        let min_dist = self.min_dist.get_or_insert_with(|| vec![f64::INFINITY; n]);
        relax(self.embeddings, index, min_dist);
        Ok(())
    }

    /// Probability of each sample being drawn next at temperature `t`.
    ///
    /// With nothing selected yet this is uniform.
    pub fn probabilities(&self, temperature: f64) -> Result<Vec<f64>> {
        match &self.min_dist {
            None => {
                let n = self.embeddings.n_samples();
                Ok(vec![1.0 / n as f64; n])
            }
            Some(d) => selection_probabilities(d, temperature),
        }
    }

    /// Picks the next sample without inserting it.
    pub fn sample_next(&mut self, temperature: Temperature) -> Result<Draw> {
        if self.n_unselected() == 0 {
            return Err(Error::PoolExhausted);
        }
        let Some(min_dist) = &self.min_dist else {
            return Ok(Draw {
                index: self.rng.random_range(0..self.embeddings.n_samples()),
                degenerate: false,
            });
        };
        match temperature.check()? {
            Temperature::Greedy => {
                let mut best: Option<(usize, f64)> = None;
                for (i, &d) in min_dist.iter().enumerate() {
                    if self.selected.contains(i) {
                        continue;
                    }
                    if best.is_none_or(|(_, b)| d > b) {
                        best = Some((i, d));
                    }
                }
                let (index, d) = best.ok_or(Error::PoolExhausted)?;
                Ok(Draw {
                    index,
                    degenerate: d == 0.0,
                })
            }
            Temperature::Finite(t) => match selection_probabilities(min_dist, t) {
                Ok(probs) => Ok(Draw {
                    index: draw_categorical(&probs, &mut self.rng),
                    degenerate: false,
                }),
                Err(Error::DegenerateDistances) => {
                    let candidates = self.selected.complement(self.embeddings.n_samples());
                    Ok(Draw {
                        index: candidates[self.rng.random_range(0..candidates.len())],
                        degenerate: true,
                    })
                }
                Err(e) => Err(e),
            },
        }
    }

    /// Draws the next sample and inserts it.
    pub fn select_next(&mut self, temperature: Temperature) -> Result<Draw> {
        let draw = self.sample_next(temperature)?;
        self.insert(draw.index)?;
        Ok(draw)
    }
}

/// Inverse-CDF draw; never returns an index with zero probability.
fn draw_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Result of a batch selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Newly selected indices, in selection order.
    pub selected: IndexSet,
    /// Number of draws that hit the all-zero-distance fallback.
    pub degenerate_draws: usize,
}

/// Selects `budget` new samples by iterated diversity sampling, starting
/// from `seed_set`. An empty `seed_set` makes the first pick uniform.
pub fn select_batch(
    embeddings: &EmbeddingMatrix,
    seed_set: &IndexSet,
    budget: usize,
    temperature: Temperature,
    seed: u64,
) -> Result<Batch> {
    temperature.check()?;
    seed_set.check_bounds(embeddings.n_samples())?;
    let available = embeddings.n_samples() - seed_set.len();
    if budget > available {
        return Err(Error::BudgetTooLarge { budget, available });
    }
    let mut state = SelectionState::with_selected(embeddings, seed_set, seed)?;
    let mut selected = IndexSet::new();
    let mut degenerate_draws = 0;
    for _ in 0..budget {
        let draw = state.select_next(temperature)?;
        selected.push(draw.index)?;
        degenerate_draws += usize::from(draw.degenerate);
    }
    if degenerate_draws > 0 {
        log::warn!(
            "{degenerate_draws} of {budget} draws found every candidate at distance zero; \
             fell back to uniform selection"
        );
    }
    Ok(Batch {
        selected,
        degenerate_draws,
    })
}
