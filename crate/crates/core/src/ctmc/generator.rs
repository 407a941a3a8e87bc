use nalgebra::{DMatrix, DVector};

use alloc::vec::Vec;

use super::{CtmcError, CtmcParams, SteadyState};

/// Solves the global balance equations of the chain truncated at AoW `k`
/// with an explicit generator matrix.
///
/// States are ordered `0, s̄_1, 1, s̄_2, 2, …, s̄_k, k`. The ring transition
/// out of state `k` is folded back into `s̄_k`, so all tail mass collects in
/// the last pair of states. One balance row is replaced by normalization.
pub fn truncated_generator_solve(params: &CtmcParams, k: usize) -> Result<SteadyState, CtmcError> {
    params.validate()?;
    if (k as u64) < params.delta + 10 {
        return Err(CtmcError::InvalidParams("k must be at least delta + 10"));
    }
    let n = 2 * k + 1;
    let plain = |i: usize| 2 * i;
    let bar = |i: usize| 2 * i - 1;

    // q[(from, to)]
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut add = |from: usize, to: usize, rate: f64| {
        if from != to && rate > 0.0 {
            q[(from, to)] += rate;
            q[(from, from)] -= rate;
        }
    };
    for i in 0..=k {
        let lb = params.block_rate(i as u64);
        add(plain(i), bar((i + 1).min(k)), params.lambda_s);
        add(plain(i), plain(0), lb);
        if i >= 1 {
            add(bar(i), plain(i), params.lambda_o);
            add(bar(i), plain(0), lb);
        }
    }

    let mut a = q.transpose();
    a.row_mut(0).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 1.0;
    let x = a.lu().solve(&rhs).ok_or(CtmcError::SingularGenerator)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CtmcError::SingularGenerator);
    }

    let p: Vec<f64> = (1..=k).map(|i| x[plain(i)]).collect();
    let p_bar: Vec<f64> = (1..=k).map(|i| x[bar(i)]).collect();
    Ok(SteadyState { p0: x[0], p, p_bar, phi1: params.phi1(), phi2: params.phi2(), truncation: k })
}
