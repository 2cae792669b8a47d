use cocorl::cmdp::{evaluate, feature_expectations, rollout, solve_cmdp, solve_mdp, trajectory_features, LinearObjective, Policy, TabularCmdp};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const S: usize = 3;
const A: usize = 2;

fn random_cmdp() -> impl Strategy<Value = TabularCmdp> {
    let rows = prop::collection::vec(prop::collection::vec(0.05..1.0f64, S), S * A);
    let feats = prop::collection::vec(0.0..1.0f64, S * A * 2);
    (rows, feats, 0.3..0.9f64).prop_map(|(rows, feats, gamma)| {
        let transitions: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                let z: f64 = r.iter().sum();
                r.iter().map(move |v| v / z)
            })
            .collect();
        TabularCmdp::new(S, A, transitions, vec![1.0 / S as f64; S], gamma, feats).unwrap()
    })
}

/// All `A^S` deterministic policies.
fn deterministic_policies() -> Vec<Policy> {
    (0..A.pow(S as u32))
        .map(|code| {
            let actions: Vec<usize> = (0..S).map(|s| code / A.pow(s as u32) % A).collect();
            Policy::deterministic(A, &actions)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mdp_optimum_matches_enumeration(cmdp in random_cmdp(), w in prop::collection::vec(-1.0..1.0f64, 2)) {
        let reward = LinearObjective::reward(w);
        let best = deterministic_policies().iter().map(|p| evaluate(&cmdp, p, &reward).unwrap()).fold(f64::MIN, f64::max);
        let got = evaluate(&cmdp, &solve_mdp(&cmdp, &reward).unwrap(), &reward).unwrap();
        prop_assert!((got - best).abs() < 1e-6, "{} vs {}", got, best);
        let (pi, _) = solve_cmdp(&cmdp, &reward, &[]).unwrap();
        prop_assert!((evaluate(&cmdp, &pi, &reward).unwrap() - best).abs() < 1e-6);
    }

    #[test]
    fn constrained_optimum_is_feasible_and_beats_feasible_deterministic(
        cmdp in random_cmdp(),
        w in prop::collection::vec(-1.0..1.0f64, 2),
        c in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let reward = LinearObjective::reward(w);
        let det = deterministic_policies();
        let costs: Vec<f64> = det.iter().map(|p| feature_expectations(&cmdp, p).unwrap().values.iter().zip(&c).map(|(a, b)| a * b).sum()).collect();
        // Threshold halfway between the cheapest and dearest deterministic policy.
        let lo = costs.iter().copied().fold(f64::MAX, f64::min);
        let hi = costs.iter().copied().fold(f64::MIN, f64::max);
        let constraint = LinearObjective::constraint(c, 0.5 * (lo + hi));
        let (pi, _) = solve_cmdp(&cmdp, &reward, std::slice::from_ref(&constraint)).unwrap();
        let phi = feature_expectations(&cmdp, &pi).unwrap().values;
        prop_assert!(constraint.excess(&phi) <= 1e-6);
        let value = reward.value(&phi);
        for (p, cost) in det.iter().zip(&costs) {
            if *cost <= 0.5 * (lo + hi) {
                prop_assert!(value >= evaluate(&cmdp, p, &reward).unwrap() - 1e-6);
            }
        }
    }
}

#[test]
fn monte_carlo_features_approach_exact_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cmdp = TabularCmdp::new(
        2,
        2,
        vec![0.9, 0.1, 0.2, 0.8, 0.5, 0.5, 0.0, 1.0],
        vec![0.5, 0.5],
        0.8,
        vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0, 0.0],
    )
    .unwrap();
    let policy = Policy::uniform(2, 2);
    let exact = feature_expectations(&cmdp, &policy).unwrap().values;
    let n = 20_000;
    let mut mean = vec![0.0; 2];
    for _ in 0..n {
        let t = rollout(&cmdp, &policy, 100, &mut rng).unwrap();
        for (m, f) in mean.iter_mut().zip(trajectory_features(&cmdp, &t)) {
            *m += f / n as f64;
        }
    }
    // Each return lies in [0, 1/(1-γ)] = [0, 5]; 20k samples put the
    // standard error near 0.02.
    for (m, e) in mean.iter().zip(&exact) {
        assert!((m - e).abs() < 0.08, "{m} vs {e}");
    }
}
