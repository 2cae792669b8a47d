//! Sample-complexity calculators.
//!
//! All bounds are returned as the smallest integer satisfying the stated
//! inequality, and never less than 1.

use crate::error::{Error, Result};

/// Maximum number of vertices of a `d`-polytope with `n` facets (the upper
/// bound theorem, dual form):
///
/// * `d = 2m`: `C(n-m, m) + C(n-m-1, m-1)`
/// * `d = 2m+1`: `2 C(n-m-1, m)`
///
/// Saturates at `u128::MAX`.
pub fn mcmullen_vertex_bound(d: usize, n: usize) -> Result<u128> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if n < d + 1 {
        return Err(Error::InvalidInput(format!("a bounded {d}-polytope needs at least {} facets, got {n}", d + 1)));
    }
    let m = d / 2;
    Ok(if d % 2 == 0 {
        binomial(n - m, m).saturating_add(binomial(n - m - 1, m - 1))
    } else {
        binomial(n - m - 1, m).saturating_mul(2)
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delta {delta} outside (0, 1)")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("discount {gamma} outside [0, 1)")))
    }
}

/// Smallest integer `k >= 1` with `k >= x`.
fn at_least(x: f64) -> Result<u64> {
    if x.is_nan() {
        return Err(Error::NumericalFailure("bound evaluated to NaN".into()));
    }
    to_count(x.ceil().max(1.0))
}

/// Smallest integer strictly greater than `x`, and at least 1.
fn above(x: f64) -> Result<u64> {
    if x.is_nan() {
        return Err(Error::NumericalFailure("bound evaluated to NaN".into()));
    }
    to_count((x.floor() + 1.0).max(1.0))
}

fn to_count(x: f64) -> Result<u64> {
    if x >= u64::MAX as f64 {
        return Err(Error::Overflow(format!("{x:e} demonstrations")));
    }
    Ok(x as u64)
}

/// `log(1 - exp(-β d / (1 - γ)))`, the Boltzmann per-demonstration miss
/// rate on the log scale.
fn boltzmann_log_miss(beta: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("beta {beta} must be positive and finite")));
    }
    check_gamma(gamma)?;
    let q = (-beta * d as f64 / (1.0 - gamma)).exp();
    if q == 0.0 {
        return Err(Error::Overflow(format!("exp(-{beta} * {d} / (1 - {gamma})) underflows")));
    }
    if q >= 1.0 {
        return Err(Error::Degenerate(format!("beta {beta} is too small: every demonstration hits every vertex")));
    }
    Ok((-q).ln_1p())
}

/// Exact optimal demonstrations: `k >= log(δ/f_v) / log(1 - δ/f_v)`.
pub fn sample_bound_exact_for_vertices(delta: f64, f_v: f64) -> Result<u64> {
    check_delta(delta)?;
    if !(f_v >= 1.0) {
        return Err(Error::InvalidInput(format!("vertex count {f_v} must be at least 1")));
    }
    let p = delta / f_v;
    if p >= 1.0 {
        return Ok(1);
    }
    at_least(p.ln() / (-p).ln_1p())
}

pub fn sample_bound_exact(delta: f64, d: usize, n: usize) -> Result<u64> {
    sample_bound_exact_for_vertices(delta, mcmullen_vertex_bound(d, n)? as f64)
}

/// Boltzmann-rational demonstrations:
/// `k >= log(δ/f_v) / log(1 - exp(-β d / (1 - γ)))`.
pub fn sample_bound_boltzmann_for_vertices(delta: f64, f_v: f64, d: usize, beta: f64, gamma: f64) -> Result<u64> {
    check_delta(delta)?;
    if !(f_v >= 1.0) {
        return Err(Error::InvalidInput(format!("vertex count {f_v} must be at least 1")));
    }
    let denom = boltzmann_log_miss(beta, d, gamma)?;
    at_least((delta / f_v).ln() / denom)
}

pub fn sample_bound_boltzmann(delta: f64, d: usize, n: usize, beta: f64, gamma: f64) -> Result<u64> {
    sample_bound_boltzmann_for_vertices(delta, mcmullen_vertex_bound(d, n)? as f64, d, beta, gamma)
}

/// Trajectories per demonstration for ε-safety with estimated feature
/// expectations: `n_traj > d log(n k / δ) / (2 ε² (1 - γ))`.
pub fn traj_bound_eps_safety(d: usize, n: usize, k: usize, delta: f64, eps: f64, gamma: f64) -> Result<u64> {
    check_delta(delta)?;
    check_gamma(gamma)?;
    if d == 0 || n == 0 || k == 0 {
        return Err(Error::InvalidInput("d, n and k must be positive".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon {eps} must be positive")));
    }
    let x = d as f64 * ((n as f64 * k as f64) / delta).ln() / (2.0 * eps * eps * (1.0 - gamma));
    above(x)
}

/// How demonstrations are generated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DemoModel {
    ExactDemos,
    Boltzmann { beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatedBounds {
    pub k: u64,
    pub n_traj: u64,
}

/// Demonstrations and trajectories per demonstration for convergence with
/// estimated feature expectations:
///
/// * `k > log(δ/(2 f_v)) / log(1 - δ/(2 f_v))`, or with the Boltzmann
///   denominator `log(1 - exp(-β d/(1-γ)))`;
/// * `n_traj > d log(2 f_v / δ) / (2 ε² (1 - γ))`.
pub fn bounds_estimated_for_vertices(
    delta: f64,
    d: usize,
    f_v: f64,
    eps: f64,
    gamma: f64,
    model: DemoModel,
) -> Result<EstimatedBounds> {
    check_delta(delta)?;
    check_gamma(gamma)?;
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if !(f_v >= 1.0) {
        return Err(Error::InvalidInput(format!("vertex count {f_v} must be at least 1")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon {eps} must be positive")));
    }
    let p = delta / (2.0 * f_v);
    let denom = match model {
        DemoModel::ExactDemos => (-p).ln_1p(),
        DemoModel::Boltzmann { beta } => boltzmann_log_miss(beta, d, gamma)?,
    };
    let k = above(p.ln() / denom)?;
    let n_traj = above(d as f64 * (2.0 * f_v / delta).ln() / (2.0 * eps * eps * (1.0 - gamma)))?;
    Ok(EstimatedBounds { k, n_traj })
}

pub fn bounds_estimated(delta: f64, d: usize, n: usize, eps: f64, gamma: f64, model: DemoModel) -> Result<EstimatedBounds> {
    bounds_estimated_for_vertices(delta, d, mcmullen_vertex_bound(d, n)? as f64, eps, gamma, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcmullen_small_cases() {
        for n in 3..20 {
            assert_eq!(mcmullen_vertex_bound(2, n).unwrap(), n as u128);
        }
        assert_eq!(mcmullen_vertex_bound(3, 4).unwrap(), 4);
        assert_eq!(mcmullen_vertex_bound(3, 6).unwrap(), 8);
        assert_eq!(mcmullen_vertex_bound(4, 16).unwrap(), 104);
        assert_eq!(mcmullen_vertex_bound(1, 2).unwrap(), 2);
        assert!(mcmullen_vertex_bound(3, 3).is_err());
        assert_eq!(mcmullen_vertex_bound(200, 10_000).unwrap(), u128::MAX);
    }

    #[test]
    fn exact_bound_values() {
        assert_eq!(sample_bound_exact_for_vertices(0.1, 10.0).unwrap(), 459);
        assert_eq!(sample_bound_exact_for_vertices(0.999, 1.0).unwrap(), 1);
        assert!(sample_bound_exact_for_vertices(1.0, 10.0).is_err());
    }

    #[test]
    fn boltzmann_bound_values() {
        let k = sample_bound_boltzmann_for_vertices(0.1, 2.0, 1, 2f64.ln(), 0.0).unwrap();
        assert_eq!(k, 5);
        assert!(matches!(sample_bound_boltzmann_for_vertices(0.1, 2.0, 1, 1e-300, 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(sample_bound_boltzmann_for_vertices(0.1, 2.0, 1, 1e4, 0.5), Err(Error::Overflow(_))));
        assert!(matches!(sample_bound_boltzmann_for_vertices(0.1, 2.0, 1, 50.0, 0.5), Err(Error::Overflow(_))));
    }

    #[test]
    fn trajectory_bound_value() {
        assert_eq!(traj_bound_eps_safety(4, 2, 10, 0.05, 0.1, 0.9).unwrap(), 11983);
    }

    #[test]
    fn estimated_bound_values() {
        let b = bounds_estimated_for_vertices(0.1, 1, 10.0, 0.1, 0.0, DemoModel::ExactDemos).unwrap();
        assert_eq!(b.k, 1058);
        let x = (2.0f64 * 10.0 / 0.1).ln() / (2.0 * 0.01);
        assert_eq!(b.n_traj, x.floor() as u64 + 1);
    }
}
