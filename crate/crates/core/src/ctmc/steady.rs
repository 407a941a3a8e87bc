use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use super::{CtmcError, CtmcParams};

/// Stationary distribution of the typical miner's chain, truncated at AoW
/// `truncation`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SteadyState {
    pub p0: f64,
    /// `p[i - 1]` is `P_i`.
    pub p: Vec<f64>,
    /// `p_bar[i - 1]` is `P_{s̄_i}`.
    pub p_bar: Vec<f64>,
    pub phi1: f64,
    pub phi2: f64,
    pub truncation: usize,
}

impl SteadyState {
    /// `P_i`; zero beyond the truncation.
    pub fn plain(&self, i: usize) -> f64 {
        match i {
            0 => self.p0,
            _ => self.p.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    /// `P_{s̄_i}` for `i >= 1`; zero beyond the truncation.
    pub fn bar(&self, i: usize) -> f64 {
        assert!(i >= 1, "s̄ states start at 1");
        self.p_bar.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.p0 + self.p.iter().sum::<f64>() + self.p_bar.iter().sum::<f64>()
    }

    /// Long-run rate of the miner's own blocks, `Σ λ_b(state) · P(state)`.
    pub fn block_rate(&self, params: &CtmcParams) -> f64 {
        let mut rate = params.lambda_b1 * self.p0;
        for i in 1..=self.truncation {
            rate += params.block_rate(i as u64) * (self.plain(i) + self.bar(i));
        }
        rate
    }

    /// Largest absolute difference over every state either side retains.
    pub fn sup_distance(&self, other: &SteadyState) -> f64 {
        let k = self.truncation.max(other.truncation);
        let mut d = (self.p0 - other.p0).abs();
        for i in 1..=k {
            d = d.max((self.plain(i) - other.plain(i)).abs());
            d = d.max((self.bar(i) - other.bar(i)).abs());
        }
        d
    }
}

/// Closed-form stationary distribution.
///
/// `P_i = P_0 Φ1^i` below the threshold and `P_0 Φ1^{δ-1} Φ2^{i-δ+1}` from
/// it on; the `s̄` states follow from the ring balance. The truncation `K` is
/// the smallest `K >= δ` whose exact geometric tail mass is below
/// `tail_bound`.
pub fn steady_state(params: &CtmcParams, tail_bound: f64) -> Result<SteadyState, CtmcError> {
    params.validate()?;
    if !(tail_bound > 0.0 && tail_bound <= 1e-6) {
        return Err(CtmcError::InvalidParams("tail_bound must lie in (0, 1e-6]"));
    }
    let CtmcParams { lambda_s, lambda_b1, lambda_b2, lambda_o, delta } = *params;
    let phi1 = params.phi1();
    let phi2 = params.phi2();
    if !(phi2 < 1.0 && phi1 < 1.0) {
        return Err(CtmcError::Numeric("geometric ratio reached 1"));
    }

    let dm1 = (delta - 1) as f64;
    let phi1_dm1 = phi1.powf(dm1);
    let p0 = 1.0 / (1.0 + lambda_s / lambda_b1 + phi1_dm1 * (lambda_s / lambda_b2 - lambda_s / lambda_b1));
    let c1 = lambda_s / (lambda_b1 + lambda_o);
    let c2 = lambda_s / (lambda_b2 + lambda_o);

    // tail(K) = P0 Φ1^{δ-1} Φ2^{K-δ+1} (Φ2 + c2) / (1 - Φ2)
    let base = p0 * phi1_dm1 * (phi2 + c2) / (1.0 - phi2);
    let extra = if base * phi2 < tail_bound || phi2 == 0.0 {
        0
    } else {
        let m = ((tail_bound / base).ln() / phi2.ln()).ceil();
        let mut m = (m as u64).max(1);
        while base * phi2.powf(m as f64) >= tail_bound {
            m += 1;
        }
        while m > 1 && base * phi2.powf((m - 1) as f64) < tail_bound {
            m -= 1;
        }
        m - 1
    };
    let truncation = usize::try_from(delta + extra).map_err(|_| CtmcError::Numeric("truncation overflow"))?;

    let mut p = Vec::with_capacity(truncation);
    let mut p_bar = Vec::with_capacity(truncation);
    for i in 1..=truncation as u64 {
        if i < delta {
            p.push(p0 * phi1.powf(i as f64));
            p_bar.push(p0 * c1 * phi1.powf((i - 1) as f64));
        } else {
            p.push(p0 * phi1_dm1 * phi2.powf((i - delta + 1) as f64));
            p_bar.push(p0 * c2 * phi1_dm1 * phi2.powf((i - delta) as f64));
        }
    }
    Ok(SteadyState { p0, p, p_bar, phi1, phi2, truncation })
}
