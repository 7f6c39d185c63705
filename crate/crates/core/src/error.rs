use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f32 },

    #[error("probability {value} out of [0, 1] at sample {sample}, augmentation {augmentation}, class {class}")]
    ProbabilityRange {
        sample: usize,
        augmentation: usize,
        class: usize,
        value: f32,
    },

    #[error(
        "probabilities at sample {sample}, augmentation {augmentation} sum to {sum}, expected 1"
    )]
    RowSum {
        sample: usize,
        augmentation: usize,
        sum: f64,
    },

    #[error("{augmentations} augmentation(s) given, at least 2 are required")]
    TooFewAugmentations { augmentations: usize },

    #[error("variance {value} is negative at row {row}, column {col}")]
    NegativeVariance { row: usize, col: usize, value: f32 },

    #[error("{what} must be at least 1")]
    EmptyDimension { what: &'static str },

    #[error("value buffer holds {actual} entries, shape requires {expected}")]
    BufferLength { expected: usize, actual: usize },

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {index}")]
    DuplicateIndex { index: usize },

    #[error("shape mismatch: {what} has {actual}, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("selected set is empty")]
    EmptySelection,

    #[error("budget {budget} exceeds the {available} available samples")]
    BudgetTooLarge { budget: usize, available: usize },

    #[error("budget must be at least 1")]
    ZeroBudget,

    #[error("no unselected samples remain")]
    PoolExhausted,

    #[error("distance {value} at index {index} is negative or not finite")]
    InvalidDistance { index: usize, value: f64 },

    #[error("all candidate distances are zero")]
    DegenerateDistances,

    #[error("temperature must be finite and positive, got {0}")]
    InvalidTemperature(f64),

    #[error("strategy {strategy} requires {input}")]
    MissingInput {
        strategy: &'static str,
        input: &'static str,
    },

    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad magic {found:?}, expected \"ALTF\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported tensor rank {0}")]
    UnsupportedRank(u8),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("{extra} unexpected trailing bytes after the payload")]
    TrailingData { extra: u64 },

    #[error("expected a rank-{expected} tensor, found rank {actual}")]
    WrongRank { expected: u8, actual: u8 },

    #[error("line {line}: row has {actual} fields, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        actual: usize,
    },

    #[error("line {line}: cannot parse {token:?} as a number")]
    ParseNumber { line: usize, token: String },

    #[error("line {line}: cannot parse {token:?} as a sample index")]
    ParseIndex { line: usize, token: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable, machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non-finite",
            Error::ProbabilityRange { .. } => "probability-range",
            Error::RowSum { .. } => "row-sum",
            Error::TooFewAugmentations { .. } => "too-few-augmentations",
            Error::NegativeVariance { .. } => "negative-variance",
            Error::EmptyDimension { .. } => "empty-dimension",
            Error::BufferLength { .. } => "buffer-length",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::DuplicateIndex { .. } => "duplicate-index",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::EmptySelection => "empty-selection",
            Error::BudgetTooLarge { .. } => "budget-too-large",
            Error::ZeroBudget => "zero-budget",
            Error::PoolExhausted => "pool-exhausted",
            Error::InvalidDistance { .. } => "invalid-distance",
            Error::DegenerateDistances => "degenerate-distances",
            Error::InvalidTemperature(_) => "invalid-temperature",
            Error::MissingInput { .. } => "missing-input",
            Error::UnknownStrategy(_) => "unknown-strategy",
            Error::Config(_) => "config",
            Error::BadMagic { .. } => "bad-magic",
            Error::UnsupportedVersion(_) => "unsupported-version",
            Error::UnsupportedRank(_) => "unsupported-rank",
            Error::UnsupportedDtype(_) => "unsupported-dtype",
            Error::Truncated { .. } => "truncated",
            Error::TrailingData { .. } => "trailing-data",
            Error::WrongRank { .. } => "wrong-rank",
            Error::RaggedRow { .. } => "ragged-row",
            Error::ParseNumber { .. } => "parse-number",
            Error::ParseIndex { .. } => "parse-index",
            Error::File { .. } | Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
