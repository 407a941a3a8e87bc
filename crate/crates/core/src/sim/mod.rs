//! Statistical-mode Monte Carlo of one pool and `n2` solo miners.
//!
//! Hashing is replaced by exponential event times: an entity of power `w`
//! finds a block after `Exp(w / 2^D)` and, while its ring for the height is
//! pending, an effective ring after `Exp(w / 2^{Ds})`. Every entity draws
//! from its own ChaCha8 stream keyed by `(seed, id)`.

mod engine;
mod stats;

pub use engine::{
    matched_pow_difficulty, run_sim, EntityKind, EntityState, Exterior, Network, Occupancy, RoundOutcome, SimConfig,
    SimMode, SimReport,
};
pub use stats::{histogram, ks_statistic, tv_distance, Histogram, KsResult, KS_MIN_SAMPLES};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("domain error: {0}")]
    Domain(&'static str),
}
