use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum SimMode {
    Poa,
    /// Every entity mines at the single (possibly fractional) difficulty
    /// `log2_difficulty`; rings play no part.
    Pow { log2_difficulty: f64 },
}

/// How the miners outside the pool are represented.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum Exterior {
    /// `n2` unit-power solo entities, each with its own AoW.
    Individual,
    /// One memoryless block source of fixed `rate` standing in for all `n2`
    /// solo miners.
    Poisson { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub n1: u64,
    pub n2: u64,
    pub d1: u32,
    pub d2: u32,
    pub d_s: u32,
    pub delta: u64,
    /// Counted rounds, after warm-up.
    pub blocks: u64,
    pub seed: u64,
    pub mode: SimMode,
    /// Uncounted leading rounds; `None` means `10 δ`.
    pub warmup: Option<u64>,
    pub exterior: Exterior,
}

impl SimConfig {
    pub fn poa(n1: u64, n2: u64, d1: u32, d2: u32, d_s: u32, delta: u64, blocks: u64, seed: u64) -> Self {
        Self { n1, n2, d1, d2, d_s, delta, blocks, seed, mode: SimMode::Poa, warmup: None, exterior: Exterior::Individual }
    }

    pub fn warmup_rounds(&self) -> u64 {
        self.warmup.unwrap_or(10 * self.delta)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.blocks == 0 {
            return Err(SimError::InvalidConfig("blocks must be at least 1"));
        }
        if self.n1 == 0 {
            return Err(SimError::InvalidConfig("n1 must be at least 1"));
        }
        match self.mode {
            SimMode::Poa => {
                if self.d2 >= self.d1 {
                    return Err(SimError::InvalidConfig("d1 must exceed d2"));
                }
                if self.d_s >= self.d2 {
                    return Err(SimError::InvalidConfig("d_s must be below d2"));
                }
                if self.delta == 0 {
                    return Err(SimError::InvalidConfig("delta must be at least 1"));
                }
            }
            SimMode::Pow { log2_difficulty } => {
                if !(log2_difficulty.is_finite() && log2_difficulty >= 0.0) {
                    return Err(SimError::InvalidConfig("PoW difficulty must be finite and non-negative"));
                }
            }
        }
        if let Exterior::Poisson { rate } = self.exterior {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(SimError::InvalidConfig("exterior rate must be positive"));
            }
            if self.n2 == 0 {
                return Err(SimError::InvalidConfig("aggregated exterior needs n2 >= 1"));
            }
        }
        Ok(())
    }
}

/// PoW difficulty exponent matching a target total block rate:
/// `2^D = N / ρ_total`.
pub fn matched_pow_difficulty(n: u64, rho_total: f64) -> f64 {
    (n as f64 / rho_total).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EntityKind {
    Pool,
    Solo,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityState {
    pub id: usize,
    pub power: f64,
    pub aow: u64,
    pub ring_done: bool,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub winner: usize,
    pub duration: f64,
    /// Entities that produced an effective ring this round, in time order.
    pub rings: Vec<usize>,
    /// Time of the pool's ring within the round, if any.
    pub pool_ring_time: Option<f64>,
    /// The winner's AoW when its block was found.
    pub winner_aow: u64,
}

/// Time the pool spends in each chain state: `plain[i]` in state `i`,
/// `bar[i]` in `s̄_i` (`bar[0]` unused).
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Occupancy {
    pub plain: Vec<f64>,
    pub bar: Vec<f64>,
}

impl Occupancy {
    fn add(&mut self, aow: u64, bar: bool, dt: f64) {
        let i = aow as usize;
        if self.plain.len() <= i {
            self.plain.resize(i + 1, 0.0);
            self.bar.resize(i + 1, 0.0);
        }
        if bar {
            self.bar[i] += dt;
        } else {
            self.plain[i] += dt;
        }
    }

    pub fn total(&self) -> f64 {
        self.plain.iter().sum::<f64>() + self.bar.iter().sum::<f64>()
    }
}

/// The simulated network. Entity 0 is the pool.
#[derive(Debug, Clone)]
pub struct Network {
    cfg: SimConfig,
    entities: Vec<EntityState>,
    rngs: Vec<ChaCha8Rng>,
    block_at: Vec<f64>,
    ring_at: Vec<(f64, usize)>,
}

impl Network {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut entities = vec![EntityState { id: 0, power: cfg.n1 as f64, aow: 0, ring_done: false, kind: EntityKind::Pool }];
        match cfg.exterior {
            Exterior::Individual => entities.extend((1..=cfg.n2 as usize).map(|id| EntityState {
                id,
                power: 1.0,
                aow: 0,
                ring_done: false,
                kind: EntityKind::Solo,
            })),
            Exterior::Poisson { .. } => entities.push(EntityState {
                id: 1,
                power: cfg.n2 as f64,
                aow: 0,
                ring_done: false,
                kind: EntityKind::Exterior,
            }),
        }
        let rngs = (0..entities.len())
            .map(|id| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(id as u64);
                rng
            })
            .collect();
        let n = entities.len();
        Ok(Self { cfg: *cfg, entities, rngs, block_at: vec![0.0; n], ring_at: Vec::with_capacity(n) })
    }

    pub fn entities(&self) -> &[EntityState] {
        &self.entities
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn block_rate(&self, e: &EntityState) -> f64 {
        match (e.kind, self.cfg.mode, self.cfg.exterior) {
            (EntityKind::Exterior, _, Exterior::Poisson { rate }) => rate,
            (_, SimMode::Pow { log2_difficulty }, _) => e.power * (-log2_difficulty).exp2(),
            (_, SimMode::Poa, _) => {
                let d = if e.aow < self.cfg.delta { self.cfg.d1 } else { self.cfg.d2 };
                e.power * (-(d as f64)).exp2()
            }
        }
    }

    fn ring_rate(&self, e: &EntityState) -> Option<f64> {
        match (self.cfg.mode, e.kind) {
            (SimMode::Poa, EntityKind::Pool | EntityKind::Solo) => Some(e.power * (-(self.cfg.d_s as f64)).exp2()),
            _ => None,
        }
    }

    fn exp(&mut self, id: usize, rate: f64) -> f64 {
        let x: f64 = self.rngs[id].sample(Exp1);
        x / rate
    }

    /// Plays one height to its first block.
    pub fn next_round(&mut self) -> RoundOutcome {
        debug_assert!(self.entities.iter().all(|e| !e.ring_done));
        self.ring_at.clear();
        for id in 0..self.entities.len() {
            let rate = self.block_rate(&self.entities[id]);
            self.block_at[id] = self.exp(id, rate);
            if let Some(r) = self.ring_rate(&self.entities[id]) {
                let t = self.exp(id, r);
                self.ring_at.push((t, id));
            }
        }
        let (mut argmin, mut min) = self.earliest_block();
        self.ring_at.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut rings = Vec::new();
        let mut pool_ring_time = None;
        for k in 0..self.ring_at.len() {
            let (t, id) = self.ring_at[k];
            if t >= min {
                break;
            }
            let e = &mut self.entities[id];
            assert!(!e.ring_done, "second ring for one entity in one round");
            e.ring_done = true;
            e.aow += 1;
            rings.push(id);
            if id == 0 {
                pool_ring_time = Some(t);
            }
            if self.cfg.mode == SimMode::Poa && self.entities[id].aow == self.cfg.delta {
                let rate = self.block_rate(&self.entities[id]);
                self.block_at[id] = t + self.exp(id, rate);
                if id == argmin {
                    (argmin, min) = self.earliest_block();
                } else if self.block_at[id] < min || (self.block_at[id] == min && id < argmin) {
                    argmin = id;
                    min = self.block_at[id];
                }
            }
        }

        let winner_aow = self.entities[argmin].aow;
        self.entities[argmin].aow = 0;
        for e in &mut self.entities {
            e.ring_done = false;
        }
        RoundOutcome { winner: argmin, duration: min, rings, pool_ring_time, winner_aow }
    }

    fn earliest_block(&self) -> (usize, f64) {
        let mut best = (0, self.block_at[0]);
        for (id, &t) in self.block_at.iter().enumerate().skip(1) {
            if t < best.1 {
                best = (id, t);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub seed: u64,
    pub blocks: u64,
    pub warmup: u64,
    pub mode: SimMode,
    /// Exterior replaced by an aggregated Poisson source.
    pub exterior_aggregated: bool,
    /// Per-entity wins in the counted window; entity 0 is the pool.
    pub block_counts: Vec<u64>,
    pub ring_counts: Vec<u64>,
    pub pool_gaps: Vec<f64>,
    pub solo_gaps: Vec<f64>,
    pub virtual_time: f64,
    pub rho_pool: f64,
    pub rho_solo: f64,
    pub rho_total: f64,
    pub pool_occupancy: Occupancy,
}

impl SimReport {
    pub fn pool_blocks(&self) -> u64 {
        self.block_counts[0]
    }

    pub fn pool_share(&self) -> f64 {
        self.pool_blocks() as f64 / self.blocks as f64
    }
}

/// Runs `warmup + blocks` rounds and reports the last `blocks`.
///
/// Gaps are only recorded inside the counted window, but may start at a
/// block found during warm-up.
pub fn run_sim(cfg: &SimConfig) -> Result<SimReport, SimError> {
    let mut net = Network::new(cfg)?;
    let warmup = cfg.warmup_rounds();
    let n = net.entities.len();
    let mut block_counts = vec![0u64; n];
    let mut ring_counts = vec![0u64; n];
    let mut pool_gaps = Vec::new();
    let mut solo_gaps = Vec::new();
    let mut occupancy = Occupancy::default();
    let mut clock = 0.0f64;
    let mut window_start = 0.0f64;
    let mut last_pool: Option<f64> = None;
    let mut last_solo: Option<f64> = None;

    for round in 0..warmup + cfg.blocks {
        let counted = round >= warmup;
        if round == warmup {
            window_start = clock;
        }
        let pool_aow = net.entities[0].aow;
        let out = net.next_round();
        clock += out.duration;
        let at = clock;
        if counted {
            block_counts[out.winner] += 1;
            for &id in &out.rings {
                ring_counts[id] += 1;
            }
            match out.pool_ring_time {
                Some(t) => {
                    occupancy.add(pool_aow, false, t);
                    occupancy.add(pool_aow + 1, true, out.duration - t);
                }
                None => occupancy.add(pool_aow, false, out.duration),
            }
        }
        let slot = if out.winner == 0 { &mut last_pool } else { &mut last_solo };
        let gaps = if out.winner == 0 { &mut pool_gaps } else { &mut solo_gaps };
        if counted {
            if let Some(prev) = *slot {
                gaps.push(at - prev);
            }
        }
        *slot = Some(at);
    }

    let virtual_time = clock - window_start;
    let pool = block_counts[0] as f64;
    let solo: u64 = block_counts[1..].iter().sum();
    Ok(SimReport {
        seed: cfg.seed,
        blocks: cfg.blocks,
        warmup,
        mode: cfg.mode,
        exterior_aggregated: matches!(cfg.exterior, Exterior::Poisson { .. }),
        block_counts,
        ring_counts,
        pool_gaps,
        solo_gaps,
        virtual_time,
        rho_pool: pool / virtual_time,
        rho_solo: if cfg.n2 == 0 { 0.0 } else { solo as f64 / (cfg.n2 as f64 * virtual_time) },
        rho_total: cfg.blocks as f64 / virtual_time,
        pool_occupancy: occupancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SimConfig {
        SimConfig::poa(4, 12, 12, 9, 5, 3, 2000, seed)
    }

    #[test]
    fn deterministic() {
        let a = run_sim(&small(7)).unwrap();
        let b = run_sim(&small(7)).unwrap();
        assert_eq!(a, b);
        let c = run_sim(&small(8)).unwrap();
        assert_ne!(a.virtual_time, c.virtual_time);
    }

    #[test]
    fn conservation() {
        let r = run_sim(&small(1)).unwrap();
        assert_eq!(r.block_counts.iter().sum::<u64>(), 2000);
        assert!((r.pool_occupancy.total() / r.virtual_time - 1.0).abs() < 1e-9);
        assert!((r.rho_total * r.virtual_time - 2000.0).abs() < 1e-6);
    }

    #[test]
    fn reset_law_and_ring_bound() {
        let mut net = Network::new(&small(3)).unwrap();
        for _ in 0..3000 {
            let before: Vec<u64> = net.entities().iter().map(|e| e.aow).collect();
            let out = net.next_round();
            let mut seen = vec![0u32; before.len()];
            for &id in &out.rings {
                seen[id] += 1;
            }
            for (id, e) in net.entities().iter().enumerate() {
                assert!(seen[id] <= 1);
                assert!(!e.ring_done);
                if id == out.winner {
                    assert_eq!(e.aow, 0);
                    assert_eq!(out.winner_aow, before[id] + seen[id] as u64);
                } else {
                    assert_eq!(e.aow, before[id] + seen[id] as u64);
                }
            }
        }
    }

    #[test]
    fn threshold_crossing_changes_rate_mid_round() {
        // With D2 far below D1, entities at δ-1 that ring should win far
        // more often than their D1 rate allows.
        let cfg = SimConfig { warmup: Some(0), ..SimConfig::poa(1, 1, 30, 4, 1, 1, 400, 11) };
        let r = run_sim(&cfg).unwrap();
        assert!(r.ring_counts.iter().sum::<u64>() > 600);
        assert!(r.rho_total > 1e-2);
    }

    #[test]
    fn pool_alone_wins_everything() {
        let cfg = SimConfig::poa(5, 0, 12, 9, 5, 1, 500, 2);
        let r = run_sim(&cfg).unwrap();
        assert_eq!(r.block_counts, vec![500]);
        assert!(r.solo_gaps.is_empty());
        assert_eq!(r.rho_solo, 0.0);
    }

    #[test]
    fn pow_ignores_rings() {
        let cfg = SimConfig { mode: SimMode::Pow { log2_difficulty: 10.5 }, ..small(4) };
        let r = run_sim(&cfg).unwrap();
        assert!(r.ring_counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn validation() {
        assert!(run_sim(&SimConfig { blocks: 0, ..small(1) }).is_err());
        assert!(run_sim(&SimConfig { n1: 0, ..small(1) }).is_err());
        assert!(run_sim(&SimConfig { d2: 12, ..small(1) }).is_err());
        assert!(run_sim(&SimConfig { exterior: Exterior::Poisson { rate: 0.0 }, ..small(1) }).is_err());
    }

    #[test]
    fn matched_difficulty() {
        assert!((matched_pow_difficulty(100, 100.0 / 1024.0) - 10.0).abs() < 1e-12);
    }
}
