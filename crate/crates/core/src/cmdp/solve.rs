use super::{LinearObjective, Policy, TabularCmdp};
use crate::error::{Error, Result};
use crate::solvers::{solve_lp, LinearProgram, LpSolution, LpStatus};

/// Policy with `π(a|s) = μ(s, a) / Σ_a' μ(s, a')`; states carrying no mass get
/// uniform action probabilities.
pub fn policy_from_occupancy(cmdp: &TabularCmdp, mu: &[f64]) -> Policy {
    let na = cmdp.n_actions();
    let mut weights = vec![0.0; cmdp.n_pairs()];
    for s in 0..cmdp.n_states() {
        let row = &mu[s * na..(s + 1) * na];
        let mass: f64 = row.iter().map(|m| m.max(0.0)).sum();
        if mass > 1e-12 {
            for a in 0..na {
                weights[s * na + a] = row[a].max(0.0);
            }
        }
    }
    Policy::from_weights(cmdp.n_states(), na, &weights)
}

/// The occupancy LP: maximize `Σ μ(s,a) r(s,a)` over `μ >= 0` subject to the
/// flow equations and `Σ μ(s,a) c_j(s,a) <= ξ_j`.
pub fn occupancy_lp(cmdp: &TabularCmdp, reward: &LinearObjective, constraints: &[LinearObjective]) -> Result<LinearProgram> {
    if reward.weights.len() != cmdp.n_features() {
        return Err(Error::InvalidInput("reward dimension does not match the features".into()));
    }
    let n = cmdp.n_pairs();
    let gamma = cmdp.discount();
    let mut lp = LinearProgram::new(n).maximize(cmdp.pair_values(&reward.weights));
    for s in 0..cmdp.n_states() {
        let mut row = vec![0.0; n];
        for a in 0..cmdp.n_actions() {
            row[cmdp.pair(s, a)] += 1.0;
        }
        for s2 in 0..cmdp.n_states() {
            for a2 in 0..cmdp.n_actions() {
                let p = cmdp.next_dist(s2, a2)[s];
                if p != 0.0 {
                    row[cmdp.pair(s2, a2)] -= gamma * p;
                }
            }
        }
        lp.eq(row, cmdp.initial_dist()[s]);
    }
    for (j, c) in constraints.iter().enumerate() {
        let threshold = c
            .threshold
            .ok_or_else(|| Error::InvalidInput(format!("constraint {j} has no threshold")))?;
        if c.weights.len() != cmdp.n_features() {
            return Err(Error::InvalidInput(format!("constraint {j} has the wrong dimension")));
        }
        lp.leq(cmdp.pair_values(&c.weights), threshold);
    }
    Ok(lp)
}

/// Solves the CMDP exactly through the occupancy LP. The returned solution's
/// point is the optimal occupancy measure.
pub fn solve_cmdp(
    cmdp: &TabularCmdp,
    reward: &LinearObjective,
    constraints: &[LinearObjective],
) -> Result<(Policy, LpSolution)> {
    let lp = occupancy_lp(cmdp, reward, constraints)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let mu = sol.point.as_deref().expect("optimal point");
            Ok((policy_from_occupancy(cmdp, mu), sol))
        }
        LpStatus::Infeasible => Err(Error::Infeasible("no policy satisfies the constraints".into())),
        // Occupancies are bounded, so this indicates a numerical problem.
        LpStatus::Unbounded => Err(Error::NumericalFailure("occupancy LP reported unbounded".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::{evaluate, occupancy_measure};

    fn two_action_single_state() -> TabularCmdp {
        TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn opposing_constraints_force_uniform() {
        let c = two_action_single_state();
        let cons = vec![
            LinearObjective::constraint(vec![1.0, 0.0], 0.5),
            LinearObjective::constraint(vec![0.0, 1.0], 0.5),
        ];
        let (p, _) = solve_cmdp(&c, &LinearObjective::reward(vec![0.0, 1.0]), &cons).unwrap();
        assert!((p.prob(0, 0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn negative_thresholds_are_infeasible() {
        let c = two_action_single_state();
        let cons = vec![LinearObjective::constraint(vec![1.0, 1.0], -1.0)];
        let r = solve_cmdp(&c, &LinearObjective::reward(vec![1.0, 0.0]), &cons);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn missing_threshold_is_rejected() {
        let c = two_action_single_state();
        let cons = vec![LinearObjective::reward(vec![1.0, 1.0])];
        assert!(matches!(
            solve_cmdp(&c, &LinearObjective::reward(vec![1.0, 0.0]), &cons),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_mass_states_get_uniform_actions() {
        // State 1 is unreachable from the start state.
        let t = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let c = TabularCmdp::with_indicator_features(2, 2, t, vec![1.0, 0.0], 0.9).unwrap();
        let (p, sol) = solve_cmdp(&c, &LinearObjective::reward(vec![1.0, 0.0, 0.0, 0.0]), &[]).unwrap();
        assert_eq!(p.row(1), &[0.5, 0.5]);
        let mu = occupancy_measure(&c, &p).unwrap();
        let lp_mu = sol.point.unwrap();
        for (a, b) in mu.iter().zip(&lp_mu) {
            assert!((a - b).abs() < 1e-9);
        }
        let v = evaluate(&c, &p, &LinearObjective::reward(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((v - 10.0).abs() < 1e-8);
    }
}
