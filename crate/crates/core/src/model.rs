//! Domain types shared by every strategy.
//!
//! Matrices are stored row-major. Raw inputs (activations, embeddings,
//! predictions) are kept in single precision; anything derived by a
//! reduction (variances, mean probabilities) is kept in double precision.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the per-row sum of a probability vector.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

/// Re-checks every invariant of a value, reporting the first violation.
pub trait Validate {
    fn validate(&self) -> Result<()>;
}

fn check_buffer(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::BufferLength { expected, actual });
    }
    Ok(())
}

fn check_nonzero(value: usize, what: &'static str) -> Result<()> {
    if value == 0 {
        return Err(Error::EmptyDimension { what });
    }
    Ok(())
}

/// N×d embedding matrix, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_samples: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(n_samples: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        let matrix = Self {
            n_samples,
            dim,
            values,
        };
        matrix.validate()?;
        Ok(matrix)
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        check_nonzero(rows.len(), "n_samples")?;
        let dim = rows[0].as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::ShapeMismatch {
                    what: "row",
                    expected: dim,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, values)
    }

    /// Converts double-precision rows, rounding to single precision.
    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<f32>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| v as f32).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// Euclidean norm of row `i`, accumulated in double precision.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i)
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        check_nonzero(indices.len(), "n_samples")?;
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_samples {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n_samples,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(Self {
            n_samples: indices.len(),
            dim: self.dim,
            values,
        })
    }
}

impl Validate for EmbeddingMatrix {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.n_samples, "n_samples")?;
        check_nonzero(self.dim, "dim")?;
        check_buffer(self.n_samples * self.dim, self.values.len())?;
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / self.dim,
                col: pos % self.dim,
                value: self.values[pos],
            });
        }
        Ok(())
    }
}

/// N×K×C model outputs: class probabilities on K augmented copies of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTensor {
    n_samples: usize,
    n_augmentations: usize,
    n_classes: usize,
    values: Vec<f32>,
}

impl PredictionTensor {
    /// Builds a tensor usable for variance estimation, which needs K ≥ 2.
    pub fn new(
        n_samples: usize,
        n_augmentations: usize,
        n_classes: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        let tensor = Self {
            n_samples,
            n_augmentations,
            n_classes,
            values,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    /// Like [`PredictionTensor::new`] but also accepts a single forward pass
    /// (K = 1), which is enough for entropy and gradient embeddings.
    pub fn new_allowing_single(
        n_samples: usize,
        n_augmentations: usize,
        n_classes: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        let tensor = Self {
            n_samples,
            n_augmentations,
            n_classes,
            values,
        };
        tensor.validate_values()?;
        Ok(tensor)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_augmentations(&self) -> usize {
        self.n_augmentations
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n_samples, self.n_augmentations, self.n_classes]
    }

    /// Probability vector of sample `i` under augmentation `k`.
    pub fn probs(&self, i: usize, k: usize) -> &[f32] {
        let start = (i * self.n_augmentations + k) * self.n_classes;
        &self.values[start..start + self.n_classes]
    }

    /// All K×C probabilities of sample `i`.
    pub fn sample(&self, i: usize) -> &[f32] {
        let len = self.n_augmentations * self.n_classes;
        &self.values[i * len..(i + 1) * len]
    }

    /// Probabilities averaged over the augmentation axis, summed in
    /// ascending order so augmentation order has no effect.
    pub fn mean_probabilities(&self) -> ProbabilityMatrix {
        let (k, c) = (self.n_augmentations, self.n_classes);
        let mut values = vec![0.0f64; self.n_samples * c];
        let mut column = Vec::with_capacity(k);
        for (i, out) in values.chunks_exact_mut(c).enumerate() {
            let sample = self.sample(i);
            for (class, o) in out.iter_mut().enumerate() {
                column.clear();
                column.extend((0..k).map(|aug| f64::from(sample[aug * c + class])));
                column.sort_unstable_by(f64::total_cmp);
                *o = column.iter().sum::<f64>() / k as f64;
            }
        }
        ProbabilityMatrix {
            n_samples: self.n_samples,
            n_classes: c,
            values,
        }
    }

    /// Keeps only the given samples, in the given order.
    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        check_nonzero(indices.len(), "n_samples")?;
        let mut values = Vec::with_capacity(indices.len() * self.n_augmentations * self.n_classes);
        for &i in indices {
            if i >= self.n_samples {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n_samples,
                });
            }
            values.extend_from_slice(self.sample(i));
        }
        Ok(Self {
            n_samples: indices.len(),
            n_augmentations: self.n_augmentations,
            n_classes: self.n_classes,
            values,
        })
    }

    fn validate_values(&self) -> Result<()> {
        check_nonzero(self.n_samples, "n_samples")?;
        check_nonzero(self.n_augmentations, "n_augmentations")?;
        check_nonzero(self.n_classes, "n_classes")?;
        check_buffer(
            self.n_samples * self.n_augmentations * self.n_classes,
            self.values.len(),
        )?;
        for (r, row) in self.values.chunks_exact(self.n_classes).enumerate() {
            let (sample, augmentation) = (r / self.n_augmentations, r % self.n_augmentations);
            let mut sum = 0.0f64;
            for (class, &value) in row.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        row: r,
                        col: class,
                        value,
                    });
                }
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::ProbabilityRange {
                        sample,
                        augmentation,
                        class,
                        value,
                    });
                }
                sum += f64::from(value);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum {
                    sample,
                    augmentation,
                    sum,
                });
            }
        }
        Ok(())
    }
}

impl Validate for PredictionTensor {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.n_samples, "n_samples")?;
        if self.n_augmentations < 2 {
            return Err(Error::TooFewAugmentations {
                augmentations: self.n_augmentations,
            });
        }
        self.validate_values()
    }
}

/// N×C class probabilities, one distribution per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n_samples: usize,
    n_classes: usize,
    values: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(n_samples: usize, n_classes: usize, values: Vec<f64>) -> Result<Self> {
        let matrix = Self {
            n_samples,
            n_classes,
            values,
        };
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }
}

impl Validate for ProbabilityMatrix {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.n_samples, "n_samples")?;
        check_nonzero(self.n_classes, "n_classes")?;
        check_buffer(self.n_samples * self.n_classes, self.values.len())?;
        for (sample, row) in self.values.chunks_exact(self.n_classes).enumerate() {
            if let Some(class) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: sample,
                    col: class,
                    value: row[class] as f32,
                });
            }
            if let Some(class) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::ProbabilityRange {
                    sample,
                    augmentation: 0,
                    class,
                    value: row[class] as f32,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum {
                    sample,
                    augmentation: 0,
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// N×C class-wise prediction variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMatrix {
    n_samples: usize,
    n_classes: usize,
    values: Vec<f64>,
}

impl VarianceMatrix {
    pub fn new(n_samples: usize, n_classes: usize, values: Vec<f64>) -> Result<Self> {
        let matrix = Self {
            n_samples,
            n_classes,
            values,
        };
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    /// Variances as a single-precision matrix, for export.
    pub fn to_embedding_matrix(&self) -> EmbeddingMatrix {
        EmbeddingMatrix {
            n_samples: self.n_samples,
            dim: self.n_classes,
            values: self.values.iter().map(|&v| v as f32).collect(),
        }
    }
}

impl Validate for VarianceMatrix {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.n_samples, "n_samples")?;
        check_nonzero(self.n_classes, "n_classes")?;
        check_buffer(self.n_samples * self.n_classes, self.values.len())?;
        for (pos, &value) in self.values.iter().enumerate() {
            let (row, col) = (pos / self.n_classes, pos % self.n_classes);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    col,
                    value: value as f32,
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeVariance {
                    row,
                    col,
                    value: value as f32,
                });
            }
        }
        Ok(())
    }
}

/// Ordered, duplicate-free list of sample indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet {
    indices: Vec<usize>,
    #[serde(skip)]
    members: HashSet<usize>,
}

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from `indices`, rejecting duplicates.
    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        let mut set = Self {
            indices: Vec::with_capacity(indices.len()),
            members: HashSet::with_capacity(indices.len()),
        };
        for index in indices {
            set.push(index)?;
        }
        Ok(set)
    }

    /// Builds a set and checks every index lies in `[0, len)`.
    pub fn from_indices_bounded(indices: Vec<usize>, len: usize) -> Result<Self> {
        let set = Self::from_indices(indices)?;
        set.check_bounds(len)?;
        Ok(set)
    }

    pub fn check_bounds(&self, len: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= len) {
            Some(&index) => Err(Error::IndexOutOfRange { index, len }),
            None => Ok(()),
        }
    }

    pub fn push(&mut self, index: usize) -> Result<()> {
        if !self.members.insert(index) {
            return Err(Error::DuplicateIndex { index });
        }
        self.indices.push(index);
        Ok(())
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> std::iter::Copied<std::slice::Iter<'_, usize>> {
        self.indices.iter().copied()
    }

    /// Indices in `[0, len)` that are not members, ascending.
    pub fn complement(&self, len: usize) -> Vec<usize> {
        (0..len).filter(|i| !self.contains(*i)).collect()
    }

    pub fn extend_from(&mut self, other: &IndexSet) -> Result<()> {
        other.iter().try_for_each(|i| self.push(i))
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;

    fn try_from(indices: Vec<usize>) -> Result<Self> {
        Self::from_indices(indices)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(set: IndexSet) -> Self {
        set.indices
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

impl Validate for IndexSet {
    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.indices.len());
        match self.indices.iter().find(|&&i| !seen.insert(i)) {
            Some(&index) => Err(Error::DuplicateIndex { index }),
            None => Ok(()),
        }
    }
}

/// Exponent control for diversity sampling.
///
/// `Finite(t)` weights candidates by `d^(1/t)`; `Greedy` is the `t → 0⁺`
/// limit, i.e. always take the farthest candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemperatureRepr", into = "TemperatureRepr")]
pub enum Temperature {
    Greedy,
    Finite(f64),
}

impl Temperature {
    /// The k-means++ seeding setting, `t = 0.5`.
    pub const KMEANS_PP: Temperature = Temperature::Finite(0.5);

    pub fn finite(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidTemperature(t));
        }
        Ok(Temperature::Finite(t))
    }

    pub fn check(self) -> Result<Self> {
        match self {
            Temperature::Greedy => Ok(self),
            Temperature::Finite(t) => Self::finite(t),
        }
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self::KMEANS_PP
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temperature::Greedy => f.write_str("greedy"),
            Temperature::Finite(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Temperature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("greedy") {
            return Ok(Temperature::Greedy);
        }
        let t: f64 = s.parse().map_err(|_| {
            Error::Config(format!(
                "temperature must be a positive number or \"greedy\", got {s:?}"
            ))
        })?;
        Self::finite(t)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TemperatureRepr {
    Number(f64),
    Name(String),
}

impl TryFrom<TemperatureRepr> for Temperature {
    type Error = Error;

    fn try_from(repr: TemperatureRepr) -> Result<Self> {
        match repr {
            TemperatureRepr::Number(t) => Temperature::finite(t),
            TemperatureRepr::Name(s) => s.parse(),
        }
    }
}

impl From<Temperature> for TemperatureRepr {
    fn from(t: Temperature) -> Self {
        match t {
            Temperature::Greedy => TemperatureRepr::Name("greedy".into()),
            Temperature::Finite(t) => TemperatureRepr::Number(t),
        }
    }
}

/// The named query strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    MaxEntropy,
    Coreset,
    Badge,
    ConsistencyTopk,
    /// Diversity sampling over consistency-scaled activations.
    ConsistencyEmbedding,
    InitialDiversity,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Random,
        Strategy::MaxEntropy,
        Strategy::Coreset,
        Strategy::Badge,
        Strategy::ConsistencyTopk,
        Strategy::ConsistencyEmbedding,
        Strategy::InitialDiversity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::MaxEntropy => "max-entropy",
            Strategy::Coreset => "coreset",
            Strategy::Badge => "badge",
            Strategy::ConsistencyTopk => "consistency-topk",
            Strategy::ConsistencyEmbedding => "consistency-embedding",
            Strategy::InitialDiversity => "initial-diversity",
        }
    }

    pub fn needs_activations(self) -> bool {
        matches!(
            self,
            Strategy::Coreset | Strategy::Badge | Strategy::ConsistencyEmbedding
        )
    }

    pub fn needs_predictions(self) -> bool {
        matches!(
            self,
            Strategy::MaxEntropy
                | Strategy::ConsistencyTopk
                | Strategy::Badge
                | Strategy::ConsistencyEmbedding
        )
    }

    pub fn needs_ssl_embeddings(self) -> bool {
        self == Strategy::InitialDiversity
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_owned()))
    }
}

/// Parameters of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    /// Only the consistency-embedding strategy reads this; the others use
    /// their fixed settings.
    #[serde(default)]
    pub temperature: Temperature,
    pub budget: usize,
    pub seed: u64,
    /// Seed the selected set with the labeled samples' consistency
    /// embeddings. Turning this off starts from an empty set.
    #[serde(default = "default_true")]
    pub seed_from_labeled: bool,
}

fn default_true() -> bool {
    true
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, budget: usize, seed: u64) -> Self {
        Self {
            strategy,
            temperature: Temperature::default(),
            budget,
            seed,
            seed_from_labeled: true,
        }
    }

    pub fn with_temperature(mut self, temperature: Temperature) -> Self {
        self.temperature = temperature;
        self
    }

    /// Checks the budget against a pool of `pool` samples with `labeled` already labeled.
    pub fn check_budget(&self, pool: usize, labeled: usize) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::ZeroBudget);
        }
        let available = pool.saturating_sub(labeled);
        if self.budget > available {
            return Err(Error::BudgetTooLarge {
                budget: self.budget,
                available,
            });
        }
        Ok(())
    }
}
