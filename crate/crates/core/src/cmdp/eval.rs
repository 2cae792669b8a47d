use nalgebra::{DMatrix, DVector};

use super::{FeatureExpectations, LinearObjective, Policy, TabularCmdp};
use crate::error::{Error, Result};

/// State transition matrix under `policy`: `P_π[s, s'] = Σ_a π(a|s) P(s'|s, a)`.
pub fn policy_transition_matrix(cmdp: &TabularCmdp, policy: &Policy) -> DMatrix<f64> {
    let n = cmdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in 0..cmdp.n_actions() {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (s2, &q) in cmdp.next_dist(s, a).iter().enumerate() {
                p[(s, s2)] += pa * q;
            }
        }
    }
    p
}

/// Discounted state-action occupancy `μ_π(s, a)` (indexed by `cmdp.pair`),
/// from a direct solve of the flow equations. Total mass is `1 / (1 - γ)`.
pub fn occupancy_measure(cmdp: &TabularCmdp, policy: &Policy) -> Result<Vec<f64>> {
    policy.check_for(cmdp)?;
    let n = cmdp.n_states();
    let gamma = cmdp.discount();
    let p = policy_transition_matrix(cmdp, policy);
    let lhs = DMatrix::<f64>::identity(n, n) - p.transpose() * gamma;
    let rhs = DVector::from_column_slice(cmdp.initial_dist());
    let states = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular flow system".into()))?;
    let mut mu = vec![0.0; cmdp.n_pairs()];
    for s in 0..n {
        for a in 0..cmdp.n_actions() {
            mu[cmdp.pair(s, a)] = states[s].max(0.0) * policy.prob(s, a);
        }
    }
    Ok(mu)
}

/// `Σ_{s,a} μ(s, a) f(s, a)` for any vector over state-action pairs.
pub fn features_of_occupancy(cmdp: &TabularCmdp, mu: &[f64]) -> Vec<f64> {
    let d = cmdp.n_features();
    let mut out = vec![0.0; d];
    for (pair, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let f = &cmdp.features()[pair * d..(pair + 1) * d];
        for (o, &fk) in out.iter_mut().zip(f) {
            *o += m * fk;
        }
    }
    out
}

pub fn feature_expectations(cmdp: &TabularCmdp, policy: &Policy) -> Result<FeatureExpectations> {
    let mu = occupancy_measure(cmdp, policy)?;
    Ok(FeatureExpectations::exact(features_of_occupancy(cmdp, &mu)))
}

/// Expected discounted return (or cost) of `policy` under a linear objective.
pub fn evaluate(cmdp: &TabularCmdp, policy: &Policy, objective: &LinearObjective) -> Result<f64> {
    Ok(objective.value(&feature_expectations(cmdp, policy)?.values))
}

/// State values of `policy` for per-pair rewards `r(s, a)`.
pub fn policy_values(cmdp: &TabularCmdp, policy: &Policy, pair_rewards: &[f64]) -> Result<Vec<f64>> {
    let n = cmdp.n_states();
    let p = policy_transition_matrix(cmdp, policy);
    let lhs = DMatrix::<f64>::identity(n, n) - p * cmdp.discount();
    let r_pi = DVector::from_iterator(
        n,
        (0..n).map(|s| (0..cmdp.n_actions()).map(|a| policy.prob(s, a) * pair_rewards[cmdp.pair(s, a)]).sum()),
    );
    let v = lhs
        .lu()
        .solve(&r_pi)
        .ok_or_else(|| Error::NumericalFailure("singular policy evaluation system".into()))?;
    Ok(v.iter().copied().collect())
}

/// `Q(s, a) = r(s, a) + γ Σ_{s'} P(s'|s, a) V(s')`.
pub fn q_values(cmdp: &TabularCmdp, pair_rewards: &[f64], values: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; cmdp.n_pairs()];
    for s in 0..cmdp.n_states() {
        for a in 0..cmdp.n_actions() {
            let next: f64 = cmdp.next_dist(s, a).iter().zip(values).map(|(p, v)| p * v).sum();
            q[cmdp.pair(s, a)] = pair_rewards[cmdp.pair(s, a)] + cmdp.discount() * next;
        }
    }
    q
}

/// Greedy deterministic policy, ties resolved towards the lowest action.
pub fn greedy_policy(cmdp: &TabularCmdp, q: &[f64]) -> Policy {
    let actions: Vec<usize> = (0..cmdp.n_states())
        .map(|s| {
            let row = &q[s * cmdp.n_actions()..(s + 1) * cmdp.n_actions()];
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-10 * (1.0 + best.abs());
            row.iter().position(|&v| v >= best - tol).unwrap_or(0)
        })
        .collect();
    Policy::deterministic(cmdp.n_actions(), &actions)
}

/// Optimal state values by value iteration, stopped when the sup-norm change
/// drops below `tol`.
pub fn value_iteration(cmdp: &TabularCmdp, pair_rewards: &[f64], tol: f64) -> Vec<f64> {
    let mut v = vec![0.0; cmdp.n_states()];
    loop {
        let q = q_values(cmdp, pair_rewards, &v);
        let next: Vec<f64> = q
            .chunks_exact(cmdp.n_actions())
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta <= tol * (1.0 - cmdp.discount()).max(1e-12) {
            return v;
        }
    }
}

/// Deterministic optimal policy of the unconstrained MDP with reward
/// `weights·f(s, a)`, by policy iteration seeded with value iteration.
pub fn solve_mdp(cmdp: &TabularCmdp, reward: &LinearObjective) -> Result<Policy> {
    let r = cmdp.pair_values(&reward.weights);
    let v = value_iteration(cmdp, &r, 1e-10);
    let mut policy = greedy_policy(cmdp, &q_values(cmdp, &r, &v));
    for _ in 0..1000 {
        let v = policy_values(cmdp, &policy, &r)?;
        let q = q_values(cmdp, &r, &v);
        // Only switch actions on strict improvement so the loop terminates.
        let mut changed = false;
        let mut actions = Vec::with_capacity(cmdp.n_states());
        for s in 0..cmdp.n_states() {
            let current = (0..cmdp.n_actions()).find(|&a| policy.prob(s, a) == 1.0).unwrap_or(0);
            let row = &q[s * cmdp.n_actions()..(s + 1) * cmdp.n_actions()];
            let (best_a, best) = row
                .iter()
                .enumerate()
                .fold((current, row[current]), |acc, (a, &qa)| if qa > acc.1 { (a, qa) } else { acc });
            if best > row[current] + 1e-11 * (1.0 + best.abs()) {
                changed = true;
                actions.push(best_a);
            } else {
                actions.push(current);
            }
        }
        policy = Policy::deterministic(cmdp.n_actions(), &actions);
        if !changed {
            return Ok(policy);
        }
    }
    Err(Error::NumericalFailure("policy iteration did not settle".into()))
}
