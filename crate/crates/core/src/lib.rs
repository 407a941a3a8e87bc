//! Proof-of-Age (PoA) mining: protocol primitives, continuous-time Markov
//! chain analytics for block rates, and an event-driven network simulator.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command line live in the `poa-lab` companion crate.
//!
//! - [`protocol`]: targets, three-band hash classification, age rings,
//!   Age-of-Work accounting and block verification over SHA-256.
//! - [`ctmc`]: closed-form steady state of the typical miner's chain, an
//!   explicit-generator oracle, pool/solo fixed-point rates and the pool's
//!   inter-arrival density.
//! - [`sim`]: statistical-mode Monte Carlo of one pool plus solo miners under
//!   PoA or plain PoW, with goodness-of-fit helpers.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod ctmc;
pub mod protocol;
pub mod sim;
