//! Batch selection strategies for semi-supervised active learning.
//!
//! The central piece is [`diversity`], a sampler that draws candidates with
//! probability proportional to `d^(1/T)`, where `d` is the distance to the
//! nearest already-selected sample. Applied to activations scaled by the
//! model's prediction variance under augmentation ([`embedding`]), it picks
//! batches that are both diverse and poorly fit by the current model.
//! [`strategy`] wires the embeddings and the sampler into the query
//! strategies, [`sim`] runs them in a small simulated active-learning loop
//! and [`io`] handles the file formats.

pub mod diversity;
pub mod embedding;
pub mod error;
pub mod io;
pub mod model;
pub mod sim;
pub mod strategy;

pub use diversity::{
    covering_radius, min_distances, select_batch, selection_probabilities, Batch, Draw,
    SelectionState,
};
pub use embedding::{
    badge_gradient_embedding, classwise_variance, classwise_variance_with_clean,
    consistency_embedding, consistency_scores, entropy_scores, pseudo_label, ConsistencyEmbedding,
};
pub use error::{Error, Result};
pub use model::{
    EmbeddingMatrix, IndexSet, PredictionTensor, ProbabilityMatrix, Strategy, StrategyConfig,
    Temperature, Validate, VarianceMatrix,
};
pub use strategy::{initial_select, query, QueryInputs};
