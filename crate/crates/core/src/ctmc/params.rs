#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use super::CtmcError;

/// Transition rates of the typical miner's chain.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CtmcParams {
    /// Effective age-ring rate, `w / 2^{D_s}`.
    pub lambda_s: f64,
    /// Block rate at `D1`.
    pub lambda_b1: f64,
    /// Block rate at `D2`.
    pub lambda_b2: f64,
    /// Aggregate exterior block rate.
    pub lambda_o: f64,
    /// AoW threshold.
    pub delta: u64,
}

impl CtmcParams {
    /// Validates the rates. `lambda_o` may be zero (a miner with no
    /// competition); every other rate must be positive.
    pub fn new(lambda_s: f64, lambda_b1: f64, lambda_b2: f64, lambda_o: f64, delta: u64) -> Result<Self, CtmcError> {
        let p = Self { lambda_s, lambda_b1, lambda_b2, lambda_o, delta };
        p.validate()?;
        Ok(p)
    }

    /// Rates for a miner of power `power` at the given exponents.
    pub fn for_miner(power: f64, d1: f64, d2: f64, d_s: f64, lambda_o: f64, delta: u64) -> Result<Self, CtmcError> {
        Self::new(power * (-d_s).exp2(), power * (-d1).exp2(), power * (-d2).exp2(), lambda_o, delta)
    }

    pub fn validate(&self) -> Result<(), CtmcError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.lambda_s) && positive(self.lambda_b1) && positive(self.lambda_b2)) {
            return Err(CtmcError::InvalidParams("ring and block rates must be positive"));
        }
        if !(self.lambda_o.is_finite() && self.lambda_o >= 0.0) {
            return Err(CtmcError::InvalidParams("exterior rate must be non-negative"));
        }
        if self.lambda_b1 > self.lambda_b2 {
            return Err(CtmcError::InvalidParams("lambda_b1 must not exceed lambda_b2"));
        }
        if self.delta == 0 {
            return Err(CtmcError::InvalidParams("delta must be at least 1"));
        }
        Ok(())
    }

    /// Block rate in a state with the given AoW.
    pub fn block_rate(&self, aow: u64) -> f64 {
        if aow < self.delta {
            self.lambda_b1
        } else {
            self.lambda_b2
        }
    }

    /// `Φ1 = λ_s λ_o / ((λ_b1 + λ_s)(λ_b1 + λ_o))`.
    pub fn phi1(&self) -> f64 {
        self.phi(self.lambda_b1)
    }

    /// `Φ2`, the same ratio at `λ_b2`.
    pub fn phi2(&self) -> f64 {
        self.phi(self.lambda_b2)
    }

    fn phi(&self, lambda_b: f64) -> f64 {
        (self.lambda_s / (lambda_b + self.lambda_s)) * (self.lambda_o / (lambda_b + self.lambda_o))
    }
}
