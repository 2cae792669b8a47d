use rand::Rng;

use super::{FeatureExpectations, Policy, Provenance, TabularCmdp, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::AxisBox;

/// Draws an index from a discrete distribution.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the cumulative sum: take the last
    // index with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Horizon `H = ceil(log(1e-6 (1 - γ)) / log γ)`, which keeps the truncated
/// tail of every feature coordinate below `1e-6`.
pub fn default_horizon(discount: f64) -> usize {
    if discount <= 0.0 {
        return 1;
    }
    ((1e-6 * (1.0 - discount)).ln() / discount.ln()).ceil().max(1.0) as usize
}

pub fn rollout<R: Rng + ?Sized>(cmdp: &TabularCmdp, policy: &Policy, horizon: usize, rng: &mut R) -> Result<Trajectory> {
    policy.check_for(cmdp)?;
    if horizon == 0 {
        return Err(Error::InvalidInput("rollout horizon must be at least 1".into()));
    }
    let mut steps = Vec::with_capacity(horizon);
    let mut s = sample_index(cmdp.initial_dist(), rng);
    for t in 0..horizon {
        let a = sample_index(policy.row(s), rng);
        steps.push((s, a));
        if t + 1 < horizon {
            s = sample_index(cmdp.next_dist(s, a), rng);
        }
    }
    Ok(Trajectory { steps })
}

/// Discounted feature sum `Σ_t γ^t f(s_t, a_t)` of one trajectory.
pub fn trajectory_features(cmdp: &TabularCmdp, trajectory: &Trajectory) -> Vec<f64> {
    let mut out = vec![0.0; cmdp.n_features()];
    let mut w = 1.0;
    for &(s, a) in &trajectory.steps {
        for (o, &f) in out.iter_mut().zip(cmdp.feature(s, a)) {
            *o += w * f;
        }
        w *= cmdp.discount();
    }
    out
}

/// Sample mean of the discounted feature sums.
pub fn estimate_feature_expectations(trajectories: &[Trajectory], cmdp: &TabularCmdp) -> Result<FeatureExpectations> {
    if trajectories.is_empty() {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    let n = trajectories.len();
    for t in trajectories {
        if t.steps.iter().any(|&(s, a)| s >= cmdp.n_states() || a >= cmdp.n_actions()) {
            return Err(Error::InvalidInput("trajectory index out of range".into()));
        }
    }
    let mut mean = vec![0.0; cmdp.n_features()];
    for t in trajectories {
        for (m, v) in mean.iter_mut().zip(trajectory_features(cmdp, t)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    Ok(FeatureExpectations { values: mean, provenance: Provenance::Estimated { n_traj: n }, confidence_box: None })
}

/// Half-width `sqrt(d log(2d/δ) / (2 n_traj (1 - γ)))` of the per-coordinate
/// confidence interval; all `2d` one-sided events hold jointly with
/// probability at least `1 - δ`.
pub fn confidence_half_width(d: usize, n_traj: usize, delta: f64, discount: f64) -> f64 {
    let d = d as f64;
    (d * (2.0 * d / delta).ln() / (2.0 * n_traj as f64 * (1.0 - discount))).sqrt()
}

/// Symmetric confidence box around an estimate, clipped to `[0, 1/(1-γ)]`.
pub fn confidence_boxes(estimate: &FeatureExpectations, delta: f64, discount: f64) -> Result<AxisBox> {
    let Provenance::Estimated { n_traj } = estimate.provenance else {
        return Err(Error::InvalidInput("confidence boxes need an estimated feature expectation".into()));
    };
    if n_traj == 0 {
        return Err(Error::InvalidInput("n_traj must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta {delta} outside (0, 1)")));
    }
    let eps = confidence_half_width(estimate.dim(), n_traj, delta, discount);
    let cap = 1.0 / (1.0 - discount);
    let lower = estimate.values.iter().map(|v| (v - eps).clamp(0.0, cap)).collect();
    let upper = estimate.values.iter().map(|v| (v + eps).clamp(0.0, cap)).collect();
    AxisBox::new(lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_state() -> TabularCmdp {
        TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn horizon_rule() {
        assert_eq!(default_horizon(0.0), 1);
        let h = default_horizon(0.9);
        assert!(0.9f64.powi(h as i32) / 0.1 <= 1e-6);
        assert!(0.9f64.powi(h as i32 - 1) / 0.1 > 1e-6);
    }

    #[test]
    fn single_state_rollouts_stay_put() {
        let c = single_state();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = rollout(&c, &Policy::uniform(1, 2), 20, &mut rng).unwrap();
        assert_eq!(t.horizon(), 20);
        assert!(t.steps.iter().all(|&(s, _)| s == 0));
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let c = single_state();
        let a = rollout(&c, &Policy::uniform(1, 2), 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = rollout(&c, &Policy::uniform(1, 2), 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_horizon_rejected() {
        let c = single_state();
        assert!(rollout(&c, &Policy::uniform(1, 2), 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn one_trajectory_without_discounting() {
        let c = single_state();
        let t = Trajectory { steps: vec![(0, 1), (0, 0)] };
        let fe = estimate_feature_expectations(&[t.clone()], &c).unwrap();
        assert_eq!(fe.values, vec![0.0, 1.0]);
        let twice = estimate_feature_expectations(&[t.clone(), t], &c).unwrap();
        assert_eq!(twice.values, fe.values);
        assert_eq!(twice.provenance, Provenance::Estimated { n_traj: 2 });
    }

    #[test]
    fn half_width_formula() {
        // d = 1, γ = 0, δ = 2/e: log(2d/δ) = 1, so the width is sqrt(1/2).
        let w = confidence_half_width(1, 1, 2.0 / std::f64::consts::E, 0.0);
        assert!((w - 0.5f64.sqrt()).abs() < 1e-12);
        let w = confidence_half_width(1, 1, 2.0 / std::f64::consts::E.powi(2), 0.0);
        assert!((w - 1.0).abs() < 1e-12);
        assert!(confidence_half_width(3, 1_000_000_000, 0.1, 0.9) < 1e-3);
    }

    #[test]
    fn boxes_are_clipped() {
        let fe = FeatureExpectations {
            values: vec![0.1, 0.9],
            provenance: Provenance::Estimated { n_traj: 1 },
            confidence_box: None,
        };
        let b = confidence_boxes(&fe, 0.1, 0.0).unwrap();
        assert_eq!(b.lower, vec![0.0, 0.0]);
        assert_eq!(b.upper, vec![1.0, 1.0]);
        assert!(confidence_boxes(&FeatureExpectations::exact(vec![0.0]), 0.1, 0.0).is_err());
    }
}
