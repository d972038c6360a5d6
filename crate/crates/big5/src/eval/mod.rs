//! The evaluation battery: statistics, text similarity, judge
//! identification, trait sweeps, single-trait induction, human imitation,
//! and the fidelity grid.

pub mod grid;
pub mod imitation;
pub mod induction;
pub mod judge;
pub mod stats;
pub mod sweep;
pub mod text;

use thiserror::Error;

use crate::persona::PersonaError;
use crate::prompt::PromptError;
use crate::psych::PsychError;

pub use grid::{fidelity_grid, linear_oracle_expected_rmse, GridCell, GridConfig, GridReport};
pub use imitation::{
    imitation_rmse, load_human_scores, HumanScores, ImitationConfig, ImitationReport,
};
pub use induction::{single_trait_induction, InductionConfig, InductionReport};
pub use judge::{
    judge_dialogue, judge_dialogues, Comparison, JudgeOptions, JudgeReport, JudgedTrait,
};
pub use stats::{pearson, rmse, CorrelationResult, StatsError};
pub use sweep::{trait_sweep, SweepConfig, SweepReport};
pub use text::{consistency, tf_cosine, ExternalProcessScorer, SimilarityScorer, TfCosineScorer};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input error: {0}")]
    Input(String),
    #[error("similarity scorer: {0}")]
    Scorer(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Psych(#[from] PsychError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
