use rand::Rng;

use crate::cmdp::{
    features_of_occupancy, solve_cmdp, FeatureExpectations, LinearObjective, Policy, TabularCmdp,
};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, furthest_point, Polytope, DEFAULT_EPS};
use crate::solvers::{solve_lp, LinearProgram, LpStatus};

/// Default cap on the number of demonstrations used to build a safe set.
pub const DEFAULT_MAX_POINTS: usize = 50;
/// Default stopping distance for incremental point addition.
pub const DEFAULT_D_STOP: f64 = 1e-6;

/// Convex hull of (a subset of) the demonstrations' feature expectations.
#[derive(Clone, Debug)]
pub struct SafeSet {
    pub polytope: Polytope,
    pub selected: Vec<FeatureExpectations>,
    /// Positions of `selected` in the input demonstration list.
    pub selected_indices: Vec<usize>,
    pub pool_remaining: usize,
    pub stop_distance_used: f64,
}

impl SafeSet {
    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }
}

/// Builds the safe set incrementally: starting from a random demonstration,
/// repeatedly add the remaining demonstration farthest from the current hull
/// until `n_points` are selected, the pool is exhausted, or the farthest
/// distance is at most `d_stop`.
pub fn build_safe_set<R: Rng + ?Sized>(
    demos: &[FeatureExpectations],
    n_points: usize,
    d_stop: f64,
    rng: &mut R,
) -> Result<SafeSet> {
    let first = demos.first().ok_or_else(|| Error::InvalidInput("no demonstrations".into()))?;
    if demos.iter().any(|d| d.dim() != first.dim()) {
        return Err(Error::InvalidInput("demonstrations differ in dimension".into()));
    }
    if n_points == 0 {
        return Err(Error::InvalidInput("n_points must be at least 1".into()));
    }
    if !(d_stop >= 0.0) {
        return Err(Error::InvalidInput(format!("d_stop {d_stop} must be nonnegative")));
    }
    let mut pool: Vec<usize> = (0..demos.len()).collect();
    let mut chosen = vec![pool.remove(rng.random_range(0..demos.len()))];
    while chosen.len() < n_points && !pool.is_empty() {
        let vertices: Vec<Vec<f64>> = chosen.iter().map(|&i| demos[i].values.clone()).collect();
        let candidates: Vec<Vec<f64>> = pool.iter().map(|&i| demos[i].values.clone()).collect();
        let best = furthest_point(&candidates, &vertices)?;
        if best.distance <= d_stop {
            break;
        }
        chosen.push(pool.remove(best.index));
    }
    let points: Vec<Vec<f64>> = chosen.iter().map(|&i| demos[i].values.clone()).collect();
    Ok(SafeSet {
        polytope: convex_hull(&points, DEFAULT_EPS)?,
        selected: chosen.iter().map(|&i| demos[i].clone()).collect(),
        selected_indices: chosen,
        pool_remaining: pool.len(),
        stop_distance_used: d_stop,
    })
}

/// Constraints `ĉ_j(s, a) = A_j·f(s, a)` with thresholds `b_j`, one per row
/// of the safe set's halfspace representation.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredConstraints {
    pub constraints: Vec<LinearObjective>,
}

impl InferredConstraints {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

pub fn inferred_cmdp(safe_set: &SafeSet) -> InferredConstraints {
    let p = &safe_set.polytope;
    let constraints =
        p.a().iter().zip(p.b()).map(|(row, &bi)| LinearObjective::constraint(row.clone(), bi)).collect();
    InferredConstraints { constraints }
}

/// Best policy whose feature expectations lie in the safe set, found by
/// solving the inferred CMDP. Fails with `Infeasible` when no achievable
/// feature expectation lies in the set.
pub fn solve_for_reward(cmdp: &TabularCmdp, safe_set: &SafeSet, reward: &LinearObjective) -> Result<(Policy, f64)> {
    if safe_set.dim() != cmdp.n_features() || reward.weights.len() != cmdp.n_features() {
        return Err(Error::InvalidInput("feature dimensions do not match".into()));
    }
    let inferred = inferred_cmdp(safe_set);
    let (policy, sol) = solve_cmdp(cmdp, reward, &inferred.constraints)?;
    let mu = sol.point.as_deref().expect("optimal point");
    Ok((policy, reward.value(&features_of_occupancy(cmdp, mu))))
}

/// `max θ·x` over the safe set itself, for problems whose features are the
/// decision variables (single-state CMDPs with continuous actions).
pub fn solve_linear_for_reward(safe_set: &SafeSet, reward: &LinearObjective) -> Result<(Vec<f64>, f64)> {
    let p = &safe_set.polytope;
    if reward.weights.len() != p.dim() {
        return Err(Error::InvalidInput("reward dimension does not match the safe set".into()));
    }
    let mut lp = LinearProgram::new(p.dim());
    lp.free_all();
    for (row, &bi) in p.a().iter().zip(p.b()) {
        lp.leq(row.clone(), bi);
    }
    let sol = solve_lp(&lp.maximize(reward.weights.clone()))?;
    match sol.status {
        LpStatus::Optimal => {
            let x = sol.point.expect("optimal point");
            let v = reward.value(&x);
            Ok((x, v))
        }
        LpStatus::Infeasible => Err(Error::Infeasible("safe set is empty".into())),
        LpStatus::Unbounded => Err(Error::Unbounded("safe set is unbounded in the reward direction".into())),
    }
}

/// `max_{π∈F} G_r(π) - max_{π∈S} G_r(π)`.
pub fn regret(
    cmdp: &TabularCmdp,
    true_constraints: &[LinearObjective],
    safe_set: &SafeSet,
    reward: &LinearObjective,
) -> Result<f64> {
    let (_, best) = solve_cmdp(cmdp, reward, true_constraints)?;
    let best = reward.value(&features_of_occupancy(cmdp, best.point.as_deref().expect("optimal point")));
    let (_, inside) = solve_for_reward(cmdp, safe_set, reward)?;
    Ok(best - inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact(v: &[f64]) -> FeatureExpectations {
        FeatureExpectations::exact(v.to_vec())
    }

    #[test]
    fn one_demo_gives_a_point() {
        let s = build_safe_set(&[exact(&[0.3, 0.7])], 1, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.selected.len(), 1);
        assert_eq!(inferred_cmdp(&s).len(), 4);
    }

    #[test]
    fn infinite_stop_distance_keeps_one_point() {
        let demos = [exact(&[0.0, 0.0]), exact(&[1.0, 0.0]), exact(&[0.0, 1.0])];
        let s = build_safe_set(&demos, 3, f64::INFINITY, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.selected.len(), 1);
        assert_eq!(s.pool_remaining, 2);
    }

    #[test]
    fn interior_demos_are_skipped() {
        let demos = [exact(&[0.0, 0.0]), exact(&[1.0, 0.0]), exact(&[0.0, 1.0]), exact(&[0.2, 0.2])];
        for seed in 0..8 {
            let s = build_safe_set(&demos, 4, 1e-6, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(inferred_cmdp(&s).len(), 3);
            if s.selected_indices[0] != 3 {
                assert!(!s.selected_indices.contains(&3));
            }
        }
    }

    #[test]
    fn n_points_caps_the_selection() {
        let demos = [exact(&[0.0, 0.0]), exact(&[1.0, 0.0]), exact(&[0.0, 1.0])];
        let s = build_safe_set(&demos, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(s.selected.len(), 2);
        assert_eq!(s.polytope.effective_dim(), 1);
    }

    #[test]
    fn single_state_safe_policy() {
        // Demonstrations at the two deterministic policies of a bandit.
        let cmdp = TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).unwrap();
        let demos = [exact(&[1.0, 0.0]), exact(&[0.5, 0.5])];
        let s = build_safe_set(&demos, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (p, v) = solve_for_reward(&cmdp, &s, &LinearObjective::reward(vec![0.0, 1.0])).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
        assert!((p.prob(0, 1) - 0.5).abs() < 1e-6);
        let (x, v) = solve_linear_for_reward(&s, &LinearObjective::reward(vec![1.0, 0.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        assert!((x[0] - 1.0).abs() < 1e-6);
    }
}
