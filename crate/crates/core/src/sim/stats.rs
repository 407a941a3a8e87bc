use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use super::SimError;

pub const KS_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic 5% critical value `1.36 / √n`.
    pub critical: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov-Smirnov test of sorted `samples` against
/// `Exp(rate)`.
pub fn ks_statistic(samples: &[f64], rate: f64) -> Result<KsResult, SimError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(SimError::Domain("KS needs at least 100 samples"));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SimError::Domain("rate must be positive"));
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SimError::Domain("samples must be sorted"));
    }
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let cdf = -(-rate * x).exp_m1();
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    let critical = 1.36 / n.sqrt();
    Ok(KsResult { statistic: d, critical, pass: d < critical })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub width: f64,
    pub counts: Vec<u64>,
    /// `counts / (n · width)`.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn edges(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.width, (k + 1) as f64 * self.width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Equal-width bins over `[0, max]`; the last bin is closed.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram, SimError> {
    if bins < 2 {
        return Err(SimError::Domain("need at least two bins"));
    }
    if samples.is_empty() {
        return Err(SimError::Domain("no samples"));
    }
    if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(SimError::Domain("samples must be finite and non-negative"));
    }
    let max = samples.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(SimError::Domain("all samples are zero"));
    }
    let width = max / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        counts[((x / width) as usize).min(bins - 1)] += 1;
    }
    let scale = 1.0 / (samples.len() as f64 * width);
    let density = counts.iter().map(|&c| c as f64 * scale).collect();
    Ok(Histogram { width, counts, density })
}

/// Total-variation distance between the histogram's bin masses and those
/// of `pdf`, with the density's mass beyond the last edge counted as one
/// more bin. Bin integrals use composite Simpson with 32 panels.
pub fn tv_distance<F, E>(hist: &Histogram, mut pdf: F) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    const PANELS: usize = 32;
    let n = hist.total() as f64;
    let mut covered = 0.0;
    let mut sum = 0.0;
    for (k, &c) in hist.counts.iter().enumerate() {
        let (a, b) = hist.edges(k);
        let h = (b - a) / PANELS as f64;
        let mut acc = pdf(a)? + pdf(b)?;
        for j in 1..PANELS {
            acc += pdf(a + j as f64 * h)? * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        let mass = acc * h / 3.0;
        covered += mass;
        sum += (c as f64 / n - mass).abs();
    }
    sum += (1.0 - covered).abs();
    Ok(0.5 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    fn exp_samples(rate: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) / rate).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn ks_accepts_own_draws() {
        let passes = (0..20).filter(|&s| ks_statistic(&exp_samples(3.0, 10_000, s), 3.0).unwrap().pass).count();
        assert!(passes >= 17, "{passes}");
    }

    #[test]
    fn ks_rejects_wrong_rate() {
        let v = exp_samples(2.0, 10_000, 1);
        assert!(!ks_statistic(&v, 1.0).unwrap().pass);
    }

    #[test]
    fn ks_domain() {
        assert!(ks_statistic(&[1.0; 99], 1.0).is_err());
        let mut v = exp_samples(1.0, 200, 2);
        v.swap(0, 199);
        assert!(ks_statistic(&v, 1.0).is_err());
    }

    #[test]
    fn histogram_point_mass() {
        let h = histogram(&[1.0; 1000], 10).unwrap();
        assert_eq!(h.counts[9], 1000);
        let integral: f64 = h.density.iter().map(|d| d * h.width).sum();
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_flat() {
        let v: Vec<f64> = (0..=10_000).map(|i| i as f64 / 10_000.0).collect();
        let h = histogram(&v, 20).unwrap();
        for d in &h.density {
            assert!((d - 1.0).abs() < 0.01, "{d}");
        }
    }

    #[test]
    fn histogram_domain() {
        assert!(histogram(&[], 10).is_err());
        assert!(histogram(&[1.0], 1).is_err());
        assert!(histogram(&[-1.0, 2.0], 4).is_err());
    }

    #[test]
    fn tv_small_for_matching_density() {
        let v = exp_samples(1.0, 100_000, 5);
        let h = histogram(&v, 60).unwrap();
        let tv = tv_distance(&h, |t| Ok::<_, ()>((-t).exp())).unwrap();
        assert!(tv < 0.02, "{tv}");
        let off = tv_distance(&h, |t| Ok::<_, ()>(2.0 * (-2.0 * t).exp())).unwrap();
        assert!(off > 0.1, "{off}");
    }
}
