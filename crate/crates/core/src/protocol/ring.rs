use alloc::vec::Vec;

use super::encoding::{self, compute_poa_hash, Address, EncodingError, Hash256, RING_PAYLOAD};

/// A mining nonce, encoded as 8 big-endian bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Nonce(pub u64);

impl Nonce {
    pub fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

/// One link of a miner's per-height proof-of-effort chain.
///
/// The first ring after the miner's own block has no `prev_ring`; every later
/// ring carries the digest of its predecessor. `proof` is `None` (NULL) until
/// an effective nonce is found at that height.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgeRing {
    pub prev_ring: Option<Hash256>,
    pub prev_block: Hash256,
    pub proof: Option<Nonce>,
}

impl AgeRing {
    pub fn is_effective(&self) -> bool {
        self.proof.is_some()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        encoding::encode_ring(self, &mut out);
        out
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        encoding::decode_ring(bytes)
    }

    pub fn digest(&self) -> Hash256 {
        Hash256::of(&self.canonical_bytes())
    }

    /// The same ring with a NULL proof, i.e. as it stood while the proof was
    /// being mined.
    pub fn unproven(&self) -> AgeRing {
        AgeRing { proof: None, ..self.clone() }
    }

    /// Hash that the proof nonce must land in `[T_M, T_A)` with, or `None`
    /// for an ineffective ring.
    pub fn proof_hash(&self, address: &Address) -> Option<Hash256> {
        self.proof
            .map(|nonce| Self::candidate_proof_hash(&self.unproven(), nonce, address))
    }

    pub(crate) fn candidate_proof_hash(unproven: &AgeRing, nonce: Nonce, address: &Address) -> Hash256 {
        compute_poa_hash(&unproven.prev_block, nonce, &RING_PAYLOAD, unproven, address)
    }
}

/// Builds the ring for a new height, chained to `prev_ring` when present.
pub fn build_age_ring(prev_ring: Option<&AgeRing>, prev_block: Hash256, proof: Option<Nonce>) -> AgeRing {
    AgeRing { prev_ring: prev_ring.map(AgeRing::digest), prev_block, proof }
}

/// AoW after accounting for this height's ring: `+1` iff it is effective.
///
/// Resetting to zero on the miner's own block is the caller's job.
pub fn update_aow(aow: u64, ring: &AgeRing) -> u64 {
    aow + u64::from(ring.is_effective())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(tag: u8) -> Hash256 {
        Hash256([tag; 32])
    }

    #[test]
    fn first_ring_has_no_link() {
        let r = build_age_ring(None, h(1), None);
        assert_eq!(r.prev_ring, None);
        assert_eq!(r.prev_block, h(1));
        assert_eq!(r.proof, None);
    }

    #[test]
    fn later_ring_links_to_predecessor_digest() {
        let a = build_age_ring(None, h(1), Some(Nonce(3)));
        let b = build_age_ring(Some(&a), h(2), Some(Nonce(4)));
        assert_eq!(b.prev_ring, Some(a.digest()));
    }

    #[test]
    fn ring_digest_depends_on_block() {
        assert_ne!(build_age_ring(None, h(1), None).digest(), build_age_ring(None, h(2), None).digest());
    }

    #[test]
    fn aow_update() {
        let proven = build_age_ring(None, h(1), Some(Nonce(0)));
        let null = build_age_ring(None, h(1), None);
        assert_eq!(update_aow(5, &proven), 6);
        assert_eq!(update_aow(5, &null), 5);
        assert_eq!(update_aow(0, &null), 0);
    }

    #[test]
    fn tampering_any_non_head_ring_changes_head_digest() {
        // Exhaustive single-field mutation for chains of length 2..=8.
        for n in 2..=8usize {
            let blocks: Vec<Hash256> = (0..n as u8).map(h).collect();
            let build = |mutate: &dyn Fn(usize, &mut AgeRing)| {
                let mut chain: Vec<AgeRing> = Vec::new();
                for (i, b) in blocks.iter().enumerate() {
                    let proof = if i % 3 == 1 { None } else { Some(Nonce(i as u64)) };
                    let mut r = build_age_ring(chain.last(), *b, proof);
                    mutate(i, &mut r);
                    chain.push(r);
                }
                // Later rings stay as built: only the targeted field changes.
                chain
            };
            let honest = build(&|_, _| {});
            let head = honest.last().unwrap().digest();
            for target in 0..n - 1 {
                let mutations: [&dyn Fn(&mut AgeRing); 3] = [
                    &|r| r.prev_block.0[0] ^= 1,
                    &|r| r.proof = if r.proof.is_some() { None } else { Some(Nonce(99)) },
                    &|r| r.prev_ring = match r.prev_ring {
                        Some(mut d) => {
                            d.0[31] ^= 1;
                            Some(d)
                        }
                        None => Some(h(0xee)),
                    },
                ];
                for m in mutations {
                    let tampered = build(&|i, r| {
                        if i == target {
                            m(r)
                        }
                    });
                    assert_ne!(tampered.last().unwrap().digest(), head, "n={n} ring={target}");
                }
            }
        }
    }
}
