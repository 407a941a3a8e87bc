//! Deterministic rules of the PoA protocol.
//!
//! Everything here is a pure function of its inputs. Hashes are SHA-256 over
//! a length-prefixed canonical encoding (see [`encoding`]) and are compared
//! against targets as big-endian unsigned integers.

mod difficulty;
pub mod encoding;
mod miner;
mod ring;
mod verify;

pub use difficulty::{
    classify_hash, difficulty_for_aow, target_from_difficulty, Bands, Difficulty, Outcome,
    PoaTargets,
};
pub use encoding::{compute_poa_hash, Address, EncodingError, Hash256, RING_PAYLOAD};
pub use miner::{mine_block, BlockRecord, MinedBlock, MinerState, ToyNetwork, Trial};
pub use ring::{build_age_ring, update_aow, AgeRing, Nonce};
pub use verify::{verify_block, RejectReason};

use thiserror::Error;

/// Errors raised by protocol constructors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("difficulty {level} exceeds hash width {hash_width}")]
    DifficultyOutOfRange { level: u32, hash_width: u32 },
    #[error("invalid targets: {0}")]
    InvalidTargets(&'static str),
    #[error("age ring already produced at this height")]
    RingAlreadyDone,
}
