//! Environment and demonstration generators.

mod demos;
mod gridworld;
mod single_state;

pub use demos::{gen_demos, Demo, DemoMode, DemoSpec, BURN_IN, THINNING};
pub use gridworld::{gen_gridworld, grid_transitions, lift_state_values, Gridworld, GridworldSpec, N_ACTIONS, REWARD_STD};
pub use single_state::{gen_single_state, unit_sphere, SingleStateProblem};

use crate::cmdp::{LinearObjective, TabularCmdp};

/// One state, two actions, `γ = 0`, costs `c_1 = (1, 0)` and `c_2 = (0, 1)`
/// with thresholds ½: only the uniformly random policy is feasible.
pub fn prop1_cmdp() -> (TabularCmdp, Vec<LinearObjective>) {
    let cmdp = TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).expect("valid instance");
    let constraints = vec![
        LinearObjective::constraint(vec![1.0, 0.0], 0.5),
        LinearObjective::constraint(vec![0.0, 1.0], 0.5),
    ];
    (cmdp, constraints)
}

/// The reward pair `r_1 = (1, 1)` and `r_2 = (0, 1)` for which no shared
/// penalty makes the uniform policy optimal under both.
pub fn prop2_rewards() -> [LinearObjective; 2] {
    [LinearObjective::reward(vec![1.0, 1.0]), LinearObjective::reward(vec![0.0, 1.0])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::{evaluate, solve_cmdp, Policy};

    #[test]
    fn only_uniform_is_feasible() {
        let (c, cons) = prop1_cmdp();
        let (p, _) = solve_cmdp(&c, &LinearObjective::reward(vec![1.0, 0.0]), &cons).unwrap();
        assert!((p.prob(0, 0) - 0.5).abs() < 1e-9);
        for a in 0..2 {
            let det = Policy::deterministic(2, &[a]);
            let worst = cons.iter().map(|k| evaluate(&c, &det, k).unwrap() - 0.5).fold(f64::MIN, f64::max);
            assert_eq!(worst, 0.5);
        }
    }
}
