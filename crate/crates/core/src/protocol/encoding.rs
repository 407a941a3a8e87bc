//! Canonical byte encoding of hash inputs.
//!
//! Every field is written as a 4-byte big-endian length followed by its
//! bytes. The PoA hash input is, in order: previous block digest, nonce,
//! payload digest, age-ring bytes and miner address. Age-ring bytes are
//! themselves three length-prefixed fields: previous ring digest (empty for
//! the first ring after a block), previous block digest and proof (empty for
//! NULL). Nonces are 8 bytes big-endian, so a NULL proof (length 0) never
//! collides with nonce 0.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ring::{AgeRing, Nonce};

pub const DIGEST_LEN: usize = 32;
const NONCE_LEN: usize = 8;

/// A 256-bit digest, read as a big-endian integer for target comparisons.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hash256(pub [u8; DIGEST_LEN]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0; DIGEST_LEN]);

    pub fn of(bytes: &[u8]) -> Self {
        Hash256(Sha256::digest(bytes).into())
    }

    pub fn value(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0[..6] {
            write!(f, "{b:02x}")?;
        }
        f.write_str("..")
    }
}

/// A miner address, the digest of its public key. Any 32 bytes will do.
pub type Address = Hash256;

/// Payload slot used when hashing an age-ring proof. A verifier never sees
/// the candidate payload a miner was working on at an earlier height, so
/// ring proofs are bound to this fixed value instead.
pub const RING_PAYLOAD: Hash256 = Hash256::ZERO;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("input ends inside a field")]
    Truncated,
    #[error("{0} trailing bytes after the last field")]
    TrailingBytes(usize),
    #[error("field `{field}` has non-canonical length {len}")]
    BadLength { field: &'static str, len: usize },
}

fn put_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

pub(crate) fn encode_ring(ring: &AgeRing, out: &mut Vec<u8>) {
    match &ring.prev_ring {
        Some(d) => put_field(out, d.as_bytes()),
        None => put_field(out, &[]),
    }
    put_field(out, ring.prev_block.as_bytes());
    match ring.proof {
        Some(n) => put_field(out, &n.to_bytes()),
        None => put_field(out, &[]),
    }
}

/// Canonical bytes of a full PoA hash input.
pub fn encode_poa_input(
    prev_block: &Hash256,
    nonce: Nonce,
    payload: &Hash256,
    ring: &AgeRing,
    address: &Address,
) -> Vec<u8> {
    let mut ring_bytes = Vec::with_capacity(3 * 4 + 2 * DIGEST_LEN + NONCE_LEN);
    encode_ring(ring, &mut ring_bytes);
    let mut out = Vec::with_capacity(5 * 4 + 3 * DIGEST_LEN + NONCE_LEN + ring_bytes.len());
    put_field(&mut out, prev_block.as_bytes());
    put_field(&mut out, &nonce.to_bytes());
    put_field(&mut out, payload.as_bytes());
    put_field(&mut out, &ring_bytes);
    put_field(&mut out, address.as_bytes());
    out
}

/// `H(b_{k-1}, x_k, y_k, r_k, PK_i)`.
pub fn compute_poa_hash(
    prev_block: &Hash256,
    nonce: Nonce,
    payload: &Hash256,
    ring: &AgeRing,
    address: &Address,
) -> Hash256 {
    Hash256::of(&encode_poa_input(prev_block, nonce, payload, ring, address))
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn field(&mut self) -> Result<&'a [u8], EncodingError> {
        if self.bytes.len() < 4 {
            return Err(EncodingError::Truncated);
        }
        let (len, rest) = self.bytes.split_at(4);
        let len = u32::from_be_bytes([len[0], len[1], len[2], len[3]]) as usize;
        if rest.len() < len {
            return Err(EncodingError::Truncated);
        }
        let (field, rest) = rest.split_at(len);
        self.bytes = rest;
        Ok(field)
    }
}

fn digest_field(bytes: &[u8], field: &'static str) -> Result<Hash256, EncodingError> {
    <[u8; DIGEST_LEN]>::try_from(bytes)
        .map(Hash256)
        .map_err(|_| EncodingError::BadLength { field, len: bytes.len() })
}

pub(crate) fn decode_ring(bytes: &[u8]) -> Result<AgeRing, EncodingError> {
    let mut r = Reader { bytes };
    let prev_ring = match r.field()? {
        [] => None,
        b => Some(digest_field(b, "prev_ring_digest")?),
    };
    let prev_block = digest_field(r.field()?, "prev_block_digest")?;
    let proof = match r.field()? {
        [] => None,
        b => {
            let arr = <[u8; NONCE_LEN]>::try_from(b)
                .map_err(|_| EncodingError::BadLength { field: "proof", len: b.len() })?;
            Some(Nonce(u64::from_be_bytes(arr)))
        }
    };
    if !r.bytes.is_empty() {
        return Err(EncodingError::TrailingBytes(r.bytes.len()));
    }
    Ok(AgeRing { prev_ring, prev_block, proof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{build_age_ring, classify_hash, Outcome, PoaTargets};
    use alloc::vec;

    fn h(tag: u8) -> Hash256 {
        Hash256([tag; 32])
    }

    #[test]
    fn layout_is_length_prefixed() {
        let ring = build_age_ring(None, h(2), None);
        let bytes = encode_poa_input(&h(1), Nonce(7), &h(3), &ring, &h(4));
        assert_eq!(&bytes[..4], &[0, 0, 0, 32]);
        assert_eq!(&bytes[4..36], &[1u8; 32]);
        assert_eq!(&bytes[36..40], &[0, 0, 0, 8]);
        assert_eq!(&bytes[40..48], &7u64.to_be_bytes());
        assert_eq!(&bytes[48..52], &[0, 0, 0, 32]);
        // ring: empty prev link, block digest, empty proof
        assert_eq!(&bytes[84..88], &(4u32 + 4 + 32 + 4).to_be_bytes());
        assert_eq!(&bytes[88..92], &[0, 0, 0, 0]);
        assert_eq!(&bytes[92..96], &[0, 0, 0, 32]);
        assert_eq!(&bytes[128..132], &[0, 0, 0, 0]);
        assert_eq!(&bytes[132..136], &[0, 0, 0, 32]);
        assert_eq!(bytes.len(), 168);
    }

    #[test]
    fn null_proof_differs_from_nonce_zero() {
        let null = build_age_ring(None, h(2), None);
        let zero = build_age_ring(None, h(2), Some(Nonce(0)));
        assert_ne!(null.canonical_bytes(), zero.canonical_bytes());
        assert_ne!(null.digest(), zero.digest());
    }

    #[test]
    fn hash_is_deterministic() {
        let ring = build_age_ring(None, h(2), Some(Nonce(5)));
        let a = compute_poa_hash(&h(1), Nonce(9), &h(3), &ring, &h(4));
        let b = compute_poa_hash(&h(1), Nonce(9), &h(3), &ring, &h(4));
        assert_eq!(a, b);
    }

    #[test]
    fn address_bit_flip_changes_hash() {
        let ring = build_age_ring(None, h(2), None);
        let base = compute_poa_hash(&h(1), Nonce(9), &h(3), &ring, &h(4));
        for bit in 0..256 {
            let mut addr = h(4);
            addr.0[bit / 8] ^= 1 << (bit % 8);
            assert_ne!(compute_poa_hash(&h(1), Nonce(9), &h(3), &ring, &addr), base);
        }
    }

    #[test]
    fn ring_bytes_round_trip_and_reject_malformed() {
        let first = build_age_ring(None, h(2), None);
        let second = build_age_ring(Some(&first), h(5), Some(Nonce(u64::MAX)));
        for ring in [&first, &second] {
            assert_eq!(AgeRing::from_canonical_bytes(&ring.canonical_bytes()).as_ref(), Ok(ring));
        }
        let bytes = second.canonical_bytes();
        assert_eq!(
            AgeRing::from_canonical_bytes(&bytes[..bytes.len() - 1]),
            Err(EncodingError::Truncated)
        );
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(AgeRing::from_canonical_bytes(&extra), Err(EncodingError::TrailingBytes(1)));
        let one_byte_nonce = [
            &[0u8, 0, 0, 0][..],
            &[0, 0, 0, 32],
            &[9; 32],
            &[0, 0, 0, 1],
            &[0],
        ]
        .concat();
        assert_eq!(
            AgeRing::from_canonical_bytes(&one_byte_nonce),
            Err(EncodingError::BadLength { field: "proof", len: 1 })
        );
        let short_digest = vec![0, 0, 0, 3, 1, 2, 3];
        assert_eq!(
            AgeRing::from_canonical_bytes(&short_digest),
            Err(EncodingError::BadLength { field: "prev_ring_digest", len: 3 })
        );
    }

    #[test]
    fn nonce_sweep_hits_ring_target_at_expected_rate() {
        // 2^20 trials against T_A = 2^(256-12): expected 256 hits.
        let targets = PoaTargets::new(256, 20, 16, 12, 1).unwrap();
        let bands = targets.bands(0);
        let ring = build_age_ring(None, h(2), None);
        let n = 1u64 << 20;
        let hits = (0..n)
            .filter(|&x| {
                let v = compute_poa_hash(&h(1), Nonce(x), &h(3), &ring, &h(4)).value();
                classify_hash(&v, &bands) != Outcome::Miss
            })
            .count() as f64;
        let p = 2f64.powi(-12);
        let mean = n as f64 * p;
        let sd = libm::sqrt(n as f64 * p * (1.0 - p));
        assert!((hits - mean).abs() <= 3.0 * sd, "hits {hits} vs {mean} ± {}", 3.0 * sd);
    }
}
