//! Reward sources.
//!
//! A reward is evaluated on clean previews `c(x_hat)` produced by the engine.
//! Closed-form rewards return scalars; comparison sources see only pairwise
//! preferences and turn them into `+1/-1` labels through two quicksort
//! partitions; external sources speak a small JSON-over-HTTP protocol.

mod estimate;
mod external;
mod judge;
mod partition;
mod source;
mod spec;

pub use estimate::{estimate_reward, EstimatorSettings};
pub use external::{
    external_reward, CompareResponse, ExternalEndpoint, ExternalReply, JudgeMode, JudgeRequest, RequestMeta,
    ScoreResponse,
};
pub use judge::{judge_router, SimulatedJudge};
pub use partition::{partition_top, Comparator, ComparisonRecord, PartitionOutcome};
pub use source::{ComparatorSource, RewardSource, Scored};
pub use spec::{RewardSpec, WeightedTerm};

use crate::diffusion::DiffusionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("dimension mismatch: reward expects {expected}, state has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid reward specification: {0}")]
    InvalidSpec(String),
    #[error("comparison aggregation failed after {} comparisons: {message}", completed.len())]
    Aggregation { message: String, completed: Vec<ComparisonRecord> },
    #[error("reward endpoint timed out: {0}")]
    Timeout(String),
    #[error("reward endpoint returned HTTP {status}")]
    HttpStatus { status: u16 },
    #[error("malformed reward response: {0}")]
    Malformed(String),
    #[error("reward endpoint unreachable: {0}")]
    Transport(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}
