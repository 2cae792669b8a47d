use std::cmp::Ordering;

use cocorl::cem::{rank_order, select_elites, Evaluation};
use proptest::prelude::*;

fn evaluation() -> impl Strategy<Value = Evaluation> {
    // Coarse values so that ties on each key actually occur.
    let v = prop_oneof![Just(0.0), Just(-0.5), Just(0.5), Just(1.0)];
    (prop_oneof![Just(0.0), Just(1.0), Just(2.0)], prop::collection::vec(v, 2))
        .prop_map(|(return_value, cost_violations)| Evaluation { return_value, cost_violations })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ranking_is_a_total_order(evals in prop::collection::vec(evaluation(), 3..12)) {
        let n = evals.len();
        for i in 0..n {
            prop_assert_eq!(rank_order((i, &evals[i]), (i, &evals[i])), Ordering::Equal);
            for j in 0..n {
                let ij = rank_order((i, &evals[i]), (j, &evals[j]));
                prop_assert_eq!(ij, rank_order((j, &evals[j]), (i, &evals[i])).reverse());
                if i != j {
                    prop_assert_ne!(ij, Ordering::Equal);
                }
                for k in 0..n {
                    if ij == Ordering::Less && rank_order((j, &evals[j]), (k, &evals[k])) == Ordering::Less {
                        prop_assert_eq!(rank_order((i, &evals[i]), (k, &evals[k])), Ordering::Less);
                    }
                }
            }
        }
    }

    #[test]
    fn elites_are_distinct_and_dominate_the_rest(evals in prop::collection::vec(evaluation(), 4..20), n_elite in 1usize..4) {
        let elites = select_elites(&evals, n_elite);
        prop_assert_eq!(elites.len(), n_elite);
        let mut sorted = elites.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), n_elite);
        let feasible = |e: &Evaluation| e.n_violated() == 0;
        let all_feasible = elites.iter().all(|&i| feasible(&evals[i]));
        for other in (0..evals.len()).filter(|i| !elites.contains(i)) {
            for &e in &elites {
                if all_feasible {
                    // Feasible elites: no feasible outsider has a better return.
                    prop_assert!(!feasible(&evals[other]) || evals[other].return_value <= evals[e].return_value);
                } else {
                    prop_assert_eq!(rank_order((e, &evals[e]), (other, &evals[other])), Ordering::Less);
                }
            }
        }
    }
}
