use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use super::{CtmcError, CtmcParams};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;

/// Consecutive increases of γ tolerated before the step is halved.
const DAMPING_PATIENCE: u32 = 10;

/// Long-run block rate of the typical miner,
/// `1 / (1/λ_b1 + A^δ B^{δ-1} (1/λ_b2 - 1/λ_b1))` with
/// `A = λ_s/(λ_b1+λ_s)` and `B = λ_o/(λ_b1+λ_o)`.
pub fn typical_rate(params: &CtmcParams) -> Result<f64, CtmcError> {
    params.validate()?;
    let CtmcParams { lambda_s, lambda_b1, lambda_b2, lambda_o, delta } = *params;
    let a = lambda_s / (lambda_b1 + lambda_s);
    let b = lambda_o / (lambda_b1 + lambda_o);
    let weight = a.powf(delta as f64) * b.powf((delta - 1) as f64);
    Ok(1.0 / (1.0 / lambda_b1 + weight * (1.0 / lambda_b2 - 1.0 / lambda_b1)))
}

/// A network of one pool of power `n1` and `n - n1` unit-power solo miners.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkConfig {
    pub n: u64,
    pub n1: u64,
    pub d1: u32,
    pub d2: u32,
    pub d_s: u32,
    pub delta: u64,
    pub epsilon: f64,
    pub max_iterations: u64,
}

impl NetworkConfig {
    pub fn new(n: u64, n1: u64, d1: u32, d2: u32, d_s: u32, delta: u64) -> Result<Self, CtmcError> {
        let cfg = Self {
            n,
            n1,
            d1,
            d2,
            d_s,
            delta,
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n1(self, n1: u64) -> Result<Self, CtmcError> {
        let cfg = Self { n1, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, CtmcError> {
        let cfg = Self { epsilon, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n2(&self) -> u64 {
        self.n - self.n1
    }

    pub fn validate(&self) -> Result<(), CtmcError> {
        if self.n1 == 0 || self.n1 >= self.n {
            return Err(CtmcError::InvalidParams("need 1 <= n1 < n"));
        }
        if self.d2 >= self.d1 {
            return Err(CtmcError::InvalidParams("d1 must exceed d2"));
        }
        if self.d_s >= self.d2 {
            return Err(CtmcError::InvalidParams("d_s must be below d2"));
        }
        if self.d1 > 1000 {
            return Err(CtmcError::InvalidParams("d1 out of floating-point range"));
        }
        if self.delta == 0 {
            return Err(CtmcError::InvalidParams("delta must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CtmcError::InvalidParams("epsilon must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(CtmcError::InvalidParams("max_iterations must be positive"));
        }
        Ok(())
    }

    /// Chain parameters of a miner of `power` facing exterior rate `lambda_o`.
    pub fn miner_params(&self, power: f64, lambda_o: f64) -> Result<CtmcParams, CtmcError> {
        CtmcParams::for_miner(power, self.d1 as f64, self.d2 as f64, self.d_s as f64, lambda_o, self.delta)
    }

    /// `φ = (2^{D1}/(2^{Ds}+2^{D1}))^δ (λ_o/(w/2^{D1}+λ_o))^{δ-1} (2^{D2}-2^{D1})`,
    /// the correction to a miner's mean block time `2^{D1}/w` scaled by `w`.
    pub fn phi(&self, power: f64, lambda_o: f64) -> f64 {
        let t1 = (self.d1 as f64).exp2();
        let t2 = (self.d2 as f64).exp2();
        let ts = (self.d_s as f64).exp2();
        let a = t1 / (ts + t1);
        let b = lambda_o / (power / t1 + lambda_o);
        a.powf(self.delta as f64) * b.powf((self.delta - 1) as f64) * (t2 - t1)
    }

    /// One application of the pool/solo rate equations.
    pub fn rate_map(&self, rho_pool: f64, rho_solo: f64) -> (f64, f64) {
        let (pool, solo, _, _) = self.rate_map_full(rho_pool, rho_solo);
        (pool, solo)
    }

    fn rate_map_full(&self, rho_pool: f64, rho_solo: f64) -> (f64, f64, f64, f64) {
        let t1 = (self.d1 as f64).exp2();
        let n1 = self.n1 as f64;
        let n2 = self.n2() as f64;
        let phi_pool = self.phi(n1, n2 * rho_solo);
        let phi_solo = self.phi(1.0, (n2 - 1.0) * rho_solo + rho_pool);
        (n1 / (t1 + phi_pool), 1.0 / (t1 + phi_solo), phi_pool, phi_solo)
    }
}

/// Relative squared change between two iterates.
fn gamma(prev: (f64, f64), next: (f64, f64)) -> f64 {
    let dp = next.0 - prev.0;
    let ds = next.1 - prev.1;
    (dp * dp + ds * ds) / (prev.0 * prev.0 + prev.1 * prev.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSolution {
    pub rho_pool: f64,
    pub rho_solo: f64,
    pub rho_total: f64,
    /// `ρ_pool / (N2 ρ_solo)`.
    pub f_poa: f64,
    /// `N1 / N2`.
    pub f_pow: f64,
    /// `f_poa / f_pow`.
    pub g: f64,
    pub phi_pool: f64,
    pub phi_solo: f64,
    pub iterations: u64,
    /// γ of the final step.
    pub residual: f64,
}

impl RateSolution {
    /// The pool's relative gain under PoA as a percentage of that under PoW.
    pub fn reduced_to_percent(&self) -> f64 {
        100.0 * self.g
    }

    /// The drop of that relative gain, in percent.
    pub fn reduced_by_percent(&self) -> f64 {
        100.0 * (1.0 - self.g)
    }
}

/// Fixed-point iteration for the pool and solo block rates.
///
/// Starts from the PoW rates at `D1`. If γ grows for ten consecutive steps
/// the step is halved (a convex combination with the previous iterate).
pub fn fpi_rates(cfg: &NetworkConfig) -> Result<RateSolution, CtmcError> {
    cfg.validate()?;
    let t1 = (cfg.d1 as f64).exp2();
    let mut x = (cfg.n1 as f64 / t1, 1.0 / t1);
    let mut step = 1.0;
    let mut last_gamma = f64::INFINITY;
    let mut rises = 0u32;
    let mut iterations = 0u64;
    loop {
        let (fp, fs, _, _) = cfg.rate_map_full(x.0, x.1);
        let next = (x.0 + step * (fp - x.0), x.1 + step * (fs - x.1));
        let g = gamma(x, next);
        iterations += 1;
        x = next;
        if !g.is_finite() || !(x.0 > 0.0 && x.1 > 0.0) {
            return Err(CtmcError::Numeric("rate iteration left the positive reals"));
        }
        if g <= cfg.epsilon {
            return Ok(solution(cfg, x, iterations, g));
        }
        if iterations >= cfg.max_iterations {
            return Err(CtmcError::NonConvergence { iterations, gamma: g });
        }
        if g > last_gamma {
            rises += 1;
            if rises >= DAMPING_PATIENCE {
                step *= 0.5;
                rises = 0;
            }
        } else {
            rises = 0;
        }
        last_gamma = g;
    }
}

fn solution(cfg: &NetworkConfig, x: (f64, f64), iterations: u64, residual: f64) -> RateSolution {
    let (_, _, phi_pool, phi_solo) = cfg.rate_map_full(x.0, x.1);
    let n1 = cfg.n1 as f64;
    let n2 = cfg.n2() as f64;
    let f_poa = x.0 / (n2 * x.1);
    let f_pow = n1 / n2;
    RateSolution {
        rho_pool: x.0,
        rho_solo: x.1,
        rho_total: x.0 + n2 * x.1,
        f_poa,
        f_pow,
        g: f_poa / f_pow,
        phi_pool,
        phi_solo,
        iterations,
        residual,
    }
}

/// Integer pool size realizing a pool-to-solo power ratio `ratio` in a
/// network of `n`: `round(n r / (1 + r))` clamped to `[1, n - 1]`.
pub fn realize_ratio(n: u64, ratio: f64) -> Result<u64, CtmcError> {
    if n < 2 {
        return Err(CtmcError::InvalidParams("network needs at least two miners"));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(CtmcError::InvalidParams("ratio must be positive"));
    }
    let n1 = (n as f64 * ratio / (1.0 + ratio)).round();
    Ok((n1 as u64).clamp(1, n - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapPoint {
    pub ratio: f64,
    pub n1: u64,
    pub n2: u64,
    pub solution: Result<RateSolution, CtmcError>,
}

/// Runs [`fpi_rates`] at every ratio of the grid. A failing point carries
/// its error; the others still run.
pub fn gain_gap_curve(base: &NetworkConfig, ratios: &[f64]) -> Result<Vec<GapPoint>, CtmcError> {
    if ratios.is_empty() {
        return Err(CtmcError::InvalidParams("ratio grid is empty"));
    }
    base.validate()?;
    ratios
        .iter()
        .map(|&ratio| {
            let n1 = realize_ratio(base.n, ratio)?;
            let cfg = NetworkConfig { n1, ..*base };
            Ok(GapPoint { ratio, n1, n2: cfg.n2(), solution: fpi_rates(&cfg) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::steady_state;

    fn hundred(n1: u64, delta: u64) -> NetworkConfig {
        NetworkConfig::new(100, n1, 32, 25, 15, delta).unwrap()
    }

    #[test]
    fn typical_rate_is_scaled_p0() {
        let params =
            CtmcParams::new(2f64.powi(-15), 2f64.powi(-32), 2f64.powi(-25), 10.0 * 2f64.powi(-25), 10).unwrap();
        let ss = steady_state(&params, 1e-12).unwrap();
        let direct = (params.lambda_b1 + params.lambda_s) * ss.p0;
        let r = typical_rate(&params).unwrap();
        assert!((r / direct - 1.0).abs() <= 1e-12);
        assert!((ss.block_rate(&params) / r - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn single_pool_miner_has_no_gap() {
        let sol = fpi_rates(&hundred(1, 10)).unwrap();
        assert!((sol.g - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn huge_threshold_has_no_gap() {
        let sol = fpi_rates(&hundred(10, 1_000_000)).unwrap();
        assert!((sol.g - 1.0).abs() <= 10.0 * DEFAULT_EPSILON);
    }

    #[test]
    fn fixed_point_reproduces_itself() {
        for (n1, delta) in [(10, 10), (25, 50), (2, 2), (50, 300)] {
            let cfg = hundred(n1, delta);
            let sol = fpi_rates(&cfg).unwrap();
            let (p, s) = cfg.rate_map(sol.rho_pool, sol.rho_solo);
            let r = gamma((sol.rho_pool, sol.rho_solo), (p, s));
            assert!(r <= 10.0 * cfg.epsilon, "n1={n1} delta={delta} residual={r:e}");
            assert!(sol.g < 1.0);
        }
    }

    #[test]
    fn delta_one_matches_single_step_formula() {
        let cfg = hundred(20, 1);
        let sol = fpi_rates(&cfg).unwrap();
        let t1 = 2f64.powi(32);
        let g = (t1 + sol.phi_solo) / (t1 + sol.phi_pool);
        assert!((sol.g / g - 1.0).abs() <= 1e-12);
        // At δ = 1 the exterior rate drops out of φ.
        assert_eq!(cfg.phi(20.0, 1.0), cfg.phi(1.0, 5.0));
    }

    #[test]
    fn iteration_cap_reports_gamma() {
        let cfg = NetworkConfig { max_iterations: 1, ..hundred(10, 10) };
        match fpi_rates(&cfg) {
            Err(CtmcError::NonConvergence { iterations: 1, gamma }) => assert!(gamma > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_realization() {
        assert_eq!(realize_ratio(100, 1.0 / 9.0).unwrap(), 10);
        assert_eq!(realize_ratio(100, 1e-6).unwrap(), 1);
        assert_eq!(realize_ratio(100, 1e6).unwrap(), 99);
        assert!(realize_ratio(100, 0.0).is_err());
        assert!(realize_ratio(100, f64::NAN).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(gain_gap_curve(&hundred(10, 10), &[]).is_err());
    }

    #[test]
    fn reduction_phrasings() {
        let sol = fpi_rates(&hundred(10, 300)).unwrap();
        assert!((sol.reduced_to_percent() + sol.reduced_by_percent() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(NetworkConfig::new(100, 0, 32, 25, 15, 10).is_err());
        assert!(NetworkConfig::new(100, 100, 32, 25, 15, 10).is_err());
        assert!(NetworkConfig::new(100, 10, 25, 25, 15, 10).is_err());
        assert!(NetworkConfig::new(100, 10, 32, 25, 25, 10).is_err());
        assert!(NetworkConfig::new(100, 10, 32, 25, 15, 0).is_err());
    }
}
