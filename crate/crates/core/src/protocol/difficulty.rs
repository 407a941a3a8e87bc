use num_bigint::BigUint;
use num_traits::One;

use super::ProtocolError;

/// A difficulty exponent `level` over hashes of `hash_width` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Difficulty {
    level: u32,
    hash_width: u32,
}

impl Difficulty {
    pub fn new(level: u32, hash_width: u32) -> Result<Self, ProtocolError> {
        if level > hash_width {
            return Err(ProtocolError::DifficultyOutOfRange { level, hash_width });
        }
        Ok(Self { level, hash_width })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn hash_width(&self) -> u32 {
        self.hash_width
    }

    /// `2^(L - D)`.
    pub fn target(&self) -> BigUint {
        BigUint::one() << (self.hash_width - self.level) as usize
    }
}

/// Returns the target `2^(l - d)` for difficulty `d` over `l`-bit hashes.
pub fn target_from_difficulty(d: u32, l: u32) -> Result<BigUint, ProtocolError> {
    Difficulty::new(d, l).map(|d| d.target())
}

/// The mining outcome of a single hash trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Outcome {
    /// `h < T_M`: a valid block.
    Block,
    /// `T_M <= h < T_A`: an effective age-ring proof.
    EffectiveRing,
    /// `h >= T_A`.
    Miss,
}

/// Concrete `(T_M, T_A)` pair for one miner at one height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bands {
    pub block: BigUint,
    pub ring: BigUint,
}

/// Classifies `h` into the half-open bands `[0, T_M)`, `[T_M, T_A)` and
/// `[T_A, 2^L)`.
pub fn classify_hash(h: &BigUint, bands: &Bands) -> Outcome {
    if *h < bands.block {
        Outcome::Block
    } else if *h < bands.ring {
        Outcome::EffectiveRing
    } else {
        Outcome::Miss
    }
}

/// Protocol-wide PoA parameters.
///
/// The block target depends on the miner's AoW through the two-level map
/// `D1` below the threshold and `D2` at or above it, while the age-ring
/// target `2^(L - D_s)` is the same for every miner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoaTargets {
    hash_width: u32,
    d1: u32,
    d2: u32,
    d_s: u32,
    delta: u64,
}

impl PoaTargets {
    pub fn new(hash_width: u32, d1: u32, d2: u32, d_s: u32, delta: u64) -> Result<Self, ProtocolError> {
        if d1 > hash_width {
            return Err(ProtocolError::DifficultyOutOfRange { level: d1, hash_width });
        }
        if d1 <= d2 {
            return Err(ProtocolError::InvalidTargets("d1 must exceed d2"));
        }
        // T_M(D2) < T_A
        if d_s >= d2 {
            return Err(ProtocolError::InvalidTargets("d_s must be below d2"));
        }
        if delta == 0 {
            return Err(ProtocolError::InvalidTargets("delta must be positive"));
        }
        Ok(Self { hash_width, d1, d2, d_s, delta })
    }

    pub fn hash_width(&self) -> u32 {
        self.hash_width
    }

    pub fn d1(&self) -> u32 {
        self.d1
    }

    pub fn d2(&self) -> u32 {
        self.d2
    }

    pub fn d_s(&self) -> u32 {
        self.d_s
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    /// `T_A`.
    pub fn ring_target(&self) -> BigUint {
        BigUint::one() << (self.hash_width - self.d_s) as usize
    }

    /// `T_M` for a miner holding `aow`.
    pub fn block_target(&self, aow: u64) -> BigUint {
        BigUint::one() << (self.hash_width - difficulty_for_aow(aow, self)) as usize
    }

    pub fn bands(&self, aow: u64) -> Bands {
        Bands { block: self.block_target(aow), ring: self.ring_target() }
    }
}

/// Two-level difficulty map: `d1` while `aow < delta`, `d2` afterwards.
pub fn difficulty_for_aow(aow: u64, targets: &PoaTargets) -> u32 {
    if aow < targets.delta {
        targets.d1
    } else {
        targets.d2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn target_examples() {
        assert_eq!(target_from_difficulty(0, 8).unwrap(), big(256));
        assert_eq!(target_from_difficulty(8, 8).unwrap(), big(1));
        assert_eq!(target_from_difficulty(25, 256).unwrap(), BigUint::one() << 231usize);
        assert_eq!(target_from_difficulty(0, 256).unwrap().bits(), 257);
    }

    #[test]
    fn target_rejects_level_above_width() {
        assert_eq!(
            target_from_difficulty(9, 8),
            Err(ProtocolError::DifficultyOutOfRange { level: 9, hash_width: 8 })
        );
    }

    #[test]
    fn classify_boundaries() {
        let t = PoaTargets::new(8, 6, 4, 2, 3).unwrap();
        let bands = t.bands(0);
        assert_eq!(bands.block, big(4));
        assert_eq!(bands.ring, big(64));
        assert_eq!(classify_hash(&big(0), &bands), Outcome::Block);
        assert_eq!(classify_hash(&big(3), &bands), Outcome::Block);
        assert_eq!(classify_hash(&big(4), &bands), Outcome::EffectiveRing);
        assert_eq!(classify_hash(&big(63), &bands), Outcome::EffectiveRing);
        assert_eq!(classify_hash(&big(64), &bands), Outcome::Miss);
        assert_eq!(classify_hash(&big(255), &bands), Outcome::Miss);
    }

    #[test]
    fn classify_with_full_ring_target() {
        // d_s = 0 puts T_A at 2^L, so nothing misses.
        let t = PoaTargets::new(8, 6, 4, 0, 3).unwrap();
        assert_eq!(classify_hash(&big(255), &t.bands(0)), Outcome::EffectiveRing);
    }

    #[test]
    fn difficulty_map_threshold() {
        let t = PoaTargets::new(256, 32, 25, 15, 10).unwrap();
        assert_eq!(difficulty_for_aow(0, &t), 32);
        assert_eq!(difficulty_for_aow(9, &t), 32);
        assert_eq!(difficulty_for_aow(10, &t), 25);
        assert_eq!(difficulty_for_aow(u64::MAX, &t), 25);
    }

    #[test]
    fn target_validation() {
        assert!(PoaTargets::new(256, 25, 25, 15, 10).is_err());
        assert!(PoaTargets::new(256, 25, 32, 15, 10).is_err());
        assert!(PoaTargets::new(256, 32, 25, 25, 10).is_err());
        assert!(PoaTargets::new(256, 32, 25, 15, 0).is_err());
        assert!(PoaTargets::new(16, 32, 25, 15, 1).is_err());
    }

    #[test]
    fn bands_partition_every_hash() {
        // Exhaustive over an 8-bit hash space for every valid exponent triple.
        for d1 in 1..=8u32 {
            for d2 in 0..d1 {
                for d_s in 0..d2 {
                    let t = PoaTargets::new(8, d1, d2, d_s, 2).unwrap();
                    for aow in 0..4 {
                        let bands = t.bands(aow);
                        assert!(bands.block < bands.ring);
                        assert!(bands.ring <= big(256));
                        let mut seen = [0u32; 3];
                        for h in 0..256u64 {
                            let idx = match classify_hash(&big(h), &bands) {
                                Outcome::Block => 0,
                                Outcome::EffectiveRing => 1,
                                Outcome::Miss => 2,
                            };
                            seen[idx] += 1;
                        }
                        let block = 1u32 << (8 - difficulty_for_aow(aow, &t));
                        let ring = 1u32 << (8 - d_s);
                        assert_eq!(seen, [block, ring - block, 256 - ring]);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn more_age_never_hardens(d1 in 2u32..64, gap in 1u32..32, delta in 1u64..500, a in 0u64..1000, extra in 0u64..1000) {
            let d2 = d1.saturating_sub(gap).max(1);
            prop_assume!(d2 < d1);
            let t = PoaTargets::new(256, d1, d2, d2 - 1, delta).unwrap();
            prop_assert!(t.block_target(a + extra) >= t.block_target(a));
        }
    }
}
