//! Steady-state analytics of the typical miner's continuous-time Markov
//! chain and the pool/solo block rates derived from it.
//!
//! States `i` (AoW `i`, ring not yet produced at this height) and `s̄_i`
//! (AoW `i`, ring already produced). From `i` the miner moves to `s̄_{i+1}`
//! at the ring rate and back to `0` at its block rate; from `s̄_i` it moves to
//! `i` when an exterior block arrives and to `0` on its own block. Block rates
//! use `D1` below the AoW threshold and `D2` at or above it.
//!
//! Time is measured in hash trials of a unit-power miner, so a miner of power
//! `w` has rate `w / 2^D` at difficulty `D`.

mod generator;
mod interarrival;
mod params;
mod rates;
mod steady;

pub use generator::truncated_generator_solve;
pub use interarrival::{
    gaussian_tail, pool_interarrival_pdf, solo_interarrival_rate, InterArrivalParams, SoloInterArrival,
    SpreadModel, GAUSSIAN_REGIME_MIN_DELTA,
};
pub use params::CtmcParams;
pub use rates::{
    fpi_rates, gain_gap_curve, realize_ratio, typical_rate, GapPoint, NetworkConfig, RateSolution,
    DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS,
};
pub use steady::{steady_state, SteadyState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtmcError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("fixed-point iteration did not converge after {iterations} steps (gamma = {gamma:e})")]
    NonConvergence { iterations: u64, gamma: f64 },
    #[error("generator system is singular")]
    SingularGenerator,
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
}
