//! Genetic search and the random baseline it is compared against.

mod attack;
mod fitness;

pub use attack::{
    run_attack, run_random_baseline, AttackConfig, AttackContext, AttackResult, EmbeddingDelta, GenerationLog, Outcome,
    SizeDelta,
};
pub use fitness::{best_index, dominates, interpretation_fitness, knn_f1, score, FitnessScore, Target, TIE_TOLERANCE};

use thiserror::Error;

use crate::embed::EmbedError;
use crate::models::ModelError;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid attack configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
