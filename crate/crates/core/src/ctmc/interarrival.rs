#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use super::{fpi_rates, CtmcError, NetworkConfig};

/// Below this threshold the Gaussian approximation of the time to reach the
/// threshold is flagged as unreliable.
pub const GAUSSIAN_REGIME_MIN_DELTA: u64 = 30;

/// Standard normal upper tail `Q(x) = erfc(x/√2) / 2`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Variance model for the time `t_δ` the pool needs to reach the AoW
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SpreadModel {
    /// `σ² = t̄/δ`.
    MeanOverDelta,
    /// `σ² = δ(a² + b²)`: the variance of a sum of `δ` ring waits of mean
    /// `a = 2^{Ds}/N1` and `δ` exterior waits of mean `b = 2^{D2}/N2`.
    #[default]
    SumOfExponentials,
}

/// Parameters of the pool's block inter-arrival density.
///
/// The pool mines at `λ1 = N1/2^{D1}` until `t_δ ~ N(t̄, σ²)` (truncated to
/// `t_δ >= 0`) and at `λ2 = N1/2^{D2}` afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterArrivalParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub t_bar: f64,
    pub sigma: f64,
    pub model: SpreadModel,
    /// False when δ is below [`GAUSSIAN_REGIME_MIN_DELTA`].
    pub gaussian_regime: bool,
}

impl InterArrivalParams {
    pub fn new(cfg: &NetworkConfig, model: SpreadModel) -> Result<Self, CtmcError> {
        cfg.validate()?;
        let n1 = cfg.n1 as f64;
        let n2 = cfg.n2() as f64;
        let delta = cfg.delta as f64;
        let a = (cfg.d_s as f64).exp2() / n1;
        let b = (cfg.d2 as f64).exp2() / n2;
        let t_bar = delta * (a + b);
        let var = match model {
            SpreadModel::MeanOverDelta => t_bar / delta,
            SpreadModel::SumOfExponentials => delta * (a * a + b * b),
        };
        Ok(Self {
            lambda1: n1 / (cfg.d1 as f64).exp2(),
            lambda2: n1 / (cfg.d2 as f64).exp2(),
            t_bar,
            sigma: var.sqrt(),
            model,
            gaussian_regime: cfg.delta >= GAUSSIAN_REGIME_MIN_DELTA,
        })
    }

    /// Density at `t >= 0`.
    ///
    /// `p1 = λ1 e^{-λ1 t} Q((t - t̄)/σ)` and
    /// `p2 = λ2 e^{-λ2 t + η t̄ + η²σ²/2} [Φ((t - m)/σ) - Φ(-m/σ)]` with
    /// `η = λ2 - λ1` and `m = t̄ + ησ²`, both divided by `Φ(t̄/σ)`. The second
    /// term is assembled in log space.
    pub fn pdf(&self, t: f64) -> Result<f64, CtmcError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CtmcError::InvalidParams("t must be finite and non-negative"));
        }
        let Self { lambda1, lambda2, t_bar, sigma, .. } = *self;
        let norm = gaussian_tail(-t_bar / sigma);
        let p1 = lambda1 * (-lambda1 * t).exp() * gaussian_tail((t - t_bar) / sigma) / norm;

        let eta = lambda2 - lambda1;
        let m = t_bar + eta * sigma * sigma;
        let window = gaussian_tail((m - t) / sigma) - gaussian_tail(m / sigma);
        let p2 = if window > 0.0 {
            let log_p2 = lambda2.ln() - lambda2 * t + eta * t_bar + 0.5 * eta * eta * sigma * sigma + window.ln()
                - norm.ln();
            log_p2.exp()
        } else {
            0.0
        };
        let p = p1 + p2;
        if !p.is_finite() {
            return Err(CtmcError::Numeric("inter-arrival density overflowed"));
        }
        Ok(p)
    }
}

/// Pool inter-arrival density at `t` under the default spread model.
pub fn pool_interarrival_pdf(t: f64, cfg: &NetworkConfig) -> Result<f64, CtmcError> {
    InterArrivalParams::new(cfg, SpreadModel::default())?.pdf(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SoloInterArrival {
    /// Approximate exponential rate of one solo miner's blocks, `2^{-D2}`.
    pub solo_rate: f64,
    /// Rate of blocks won by any solo miner, `N2 ρ_solo`.
    pub all_solo_rate: f64,
    /// `δ(2^{Ds} + 2^{D1}/(N-1)) < 0.1 · 2^{D1}`.
    pub premise_holds: bool,
}

pub fn solo_interarrival_rate(cfg: &NetworkConfig) -> Result<SoloInterArrival, CtmcError> {
    let sol = fpi_rates(cfg)?;
    let t1 = (cfg.d1 as f64).exp2();
    let lhs = cfg.delta as f64 * ((cfg.d_s as f64).exp2() + t1 / (cfg.n - 1) as f64);
    Ok(SoloInterArrival {
        solo_rate: (-(cfg.d2 as f64)).exp2(),
        all_solo_rate: cfg.n2() as f64 * sol.rho_solo,
        premise_holds: lhs < 0.1 * t1,
    })
}
