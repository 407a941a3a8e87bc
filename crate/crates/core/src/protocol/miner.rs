use alloc::vec::Vec;

use super::difficulty::{classify_hash, Outcome, PoaTargets};
use super::encoding::{compute_poa_hash, Address, Hash256};
use super::ring::{build_age_ring, update_aow, AgeRing, Nonce};
use super::ProtocolError;

/// A block as broadcast: header fields plus the head age ring and the AoW
/// the miner claims for it.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockRecord {
    pub height: u64,
    pub prev_digest: Hash256,
    pub payload_digest: Hash256,
    pub nonce: Nonce,
    pub ring: AgeRing,
    pub miner_address: Address,
    pub claimed_aow: u64,
}

impl BlockRecord {
    /// The block's own digest; doubles as `b_k` for the next height.
    pub fn digest(&self) -> Hash256 {
        compute_poa_hash(&self.prev_digest, self.nonce, &self.payload_digest, &self.ring, &self.miner_address)
    }
}

/// A freshly mined block with the evidence a verifier needs: the rings
/// preceding the head and the block digests each ring was built on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedBlock {
    pub block: BlockRecord,
    pub prior_rings: Vec<AgeRing>,
    pub prev_blocks: Vec<Hash256>,
}

/// Result of trying one nonce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trial {
    Block,
    Ring,
    Miss,
}

/// Per-miner protocol state.
#[derive(Debug, Clone)]
pub struct MinerState {
    pub address: Address,
    /// Hash trials per unit time.
    pub power: f64,
    aow: u64,
    ring_done: bool,
    ring_chain: Vec<AgeRing>,
    height: u64,
}

impl MinerState {
    /// A newcomer: zero AoW and an empty ring chain.
    pub fn new(address: Address, power: f64) -> Self {
        Self { address, power, aow: 0, ring_done: false, ring_chain: Vec::new(), height: 0 }
    }

    pub fn aow(&self) -> u64 {
        self.aow
    }

    pub fn ring_done(&self) -> bool {
        self.ring_done
    }

    pub fn ring_chain(&self) -> &[AgeRing] {
        &self.ring_chain
    }

    /// Opens height `height` on top of `prev_block` with a NULL-proof ring.
    pub fn begin_height(&mut self, height: u64, prev_block: Hash256) {
        let ring = build_age_ring(self.ring_chain.last(), prev_block, None);
        self.ring_chain.push(ring);
        self.ring_done = false;
        self.height = height;
    }

    /// Installs `nonce` as the current height's ring proof.
    pub fn record_ring_proof(&mut self, nonce: Nonce) -> Result<(), ProtocolError> {
        if self.ring_done {
            return Err(ProtocolError::RingAlreadyDone);
        }
        let head = self.ring_chain.last_mut().expect("begin_height not called");
        head.proof = Some(nonce);
        self.aow = update_aow(self.aow, head);
        self.ring_done = true;
        Ok(())
    }

    fn head(&self) -> &AgeRing {
        self.ring_chain.last().expect("begin_height not called")
    }

    /// Tries one nonce at the current height.
    ///
    /// The block hash commits to the head ring as it stands. While the
    /// height's ring is still NULL the same nonce is also tried as a ring
    /// proof, which counts only when it lands in `[T_M, T_A)`.
    pub fn try_nonce(&mut self, nonce: Nonce, payload: &Hash256, targets: &PoaTargets) -> Trial {
        let head = self.head();
        let bands = targets.bands(self.aow);
        let h = compute_poa_hash(&head.prev_block, nonce, payload, head, &self.address);
        if classify_hash(&h.value(), &bands) == Outcome::Block {
            return Trial::Block;
        }
        if !self.ring_done {
            let proof = AgeRing::candidate_proof_hash(head, nonce, &self.address);
            if classify_hash(&proof.value(), &bands) == Outcome::EffectiveRing {
                self.record_ring_proof(nonce).expect("ring_done checked");
                return Trial::Ring;
            }
        }
        Trial::Miss
    }

    /// Packages the block found with `nonce` and resets AoW and the chain.
    pub fn claim_block(&mut self, nonce: Nonce, payload: Hash256, prev_blocks: Vec<Hash256>) -> MinedBlock {
        let mut rings = core::mem::take(&mut self.ring_chain);
        let ring = rings.pop().expect("begin_height not called");
        let block = BlockRecord {
            height: self.height,
            prev_digest: ring.prev_block,
            payload_digest: payload,
            nonce,
            ring,
            miner_address: self.address,
            claimed_aow: self.aow,
        };
        self.aow = 0;
        self.ring_done = false;
        MinedBlock { block, prior_rings: rings, prev_blocks }
    }
}

/// Sweeps nonces from `start` for a lone miner until it finds a block at
/// height 1 over `prev_block`. Returns the block and the number of trials.
pub fn mine_block(
    miner: &mut MinerState,
    prev_block: Hash256,
    payload: Hash256,
    targets: &PoaTargets,
    start: u64,
) -> (MinedBlock, u64) {
    miner.begin_height(1, prev_block);
    let mut nonce = start;
    loop {
        if miner.try_nonce(Nonce(nonce), &payload, targets) == Trial::Block {
            let trials = nonce - start + 1;
            let prev_blocks = miner.ring_chain().iter().map(|r| r.prev_block).collect();
            return (miner.claim_block(Nonce(nonce), payload, prev_blocks), trials);
        }
        nonce += 1;
    }
}

/// A concrete-hash network of honest miners taking turns on nonces.
///
/// Each tick every miner tries `power` consecutive nonces (rounded, at least
/// one), in miner order; the first block found wins the height.
#[derive(Debug, Clone)]
pub struct ToyNetwork {
    targets: PoaTargets,
    miners: Vec<MinerState>,
    chain: Vec<Hash256>,
}

impl ToyNetwork {
    pub fn new(targets: PoaTargets, miners: Vec<MinerState>, genesis: Hash256) -> Self {
        Self { targets, miners, chain: alloc::vec![genesis] }
    }

    pub fn miners(&self) -> &[MinerState] {
        &self.miners
    }

    pub fn chain(&self) -> &[Hash256] {
        &self.chain
    }

    pub fn targets(&self) -> &PoaTargets {
        &self.targets
    }

    /// Mines one height. Returns the winner index and its block.
    pub fn mine_next(&mut self) -> (usize, MinedBlock) {
        let height = self.chain.len() as u64;
        let prev = *self.chain.last().expect("genesis");
        let payload = Hash256::of(&height.to_be_bytes());
        for m in &mut self.miners {
            m.begin_height(height, prev);
        }
        let trials: Vec<u64> = self.miners.iter().map(|m| (libm::round(m.power) as u64).max(1)).collect();
        let mut cursor = 0u64;
        loop {
            for (i, m) in self.miners.iter_mut().enumerate() {
                for t in 0..trials[i] {
                    let nonce = Nonce(cursor + t);
                    if m.try_nonce(nonce, &payload, &self.targets) == Trial::Block {
                        let start = height as usize + 1 - m.ring_chain().len();
                        let prev_blocks = self.chain[start - 1..].to_vec();
                        let mined = m.claim_block(nonce, payload, prev_blocks);
                        self.chain.push(mined.block.digest());
                        return (i, mined);
                    }
                }
            }
            cursor += trials.iter().max().copied().unwrap_or(1);
        }
    }
}
