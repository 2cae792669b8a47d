use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cmdp::{solve_cmdp, LinearObjective, TabularCmdp};
use crate::error::{Error, Result};

pub const N_ACTIONS: usize = 5;
/// Column and row offsets of left, right, up, down and stay.
const MOVES: [(i64, i64); N_ACTIONS] = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)];
const MAX_THRESHOLD_ROUNDS: usize = 1000;
pub const REWARD_STD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct GridworldSpec {
    pub size: usize,
    /// Probability of executing a uniformly random action instead.
    pub slip_p: f64,
    pub n_goal: usize,
    pub n_limited: usize,
    pub n_constraints: usize,
    pub discount: f64,
    /// Thresholds are drawn from `U[0, threshold_max]`.
    pub threshold_max: f64,
}

impl Default for GridworldSpec {
    fn default() -> Self {
        Self { size: 3, slip_p: 0.0, n_goal: 2, n_limited: 3, n_constraints: 2, discount: 0.9, threshold_max: 1.0 }
    }
}

impl GridworldSpec {
    pub fn validate(&self) -> Result<()> {
        let cells = self.size * self.size;
        if self.size == 0 {
            return Err(Error::InvalidInput("grid size must be positive".into()));
        }
        if self.n_goal == 0 || self.n_goal + self.n_limited > cells {
            return Err(Error::InvalidInput(format!(
                "{} goal and {} limited cells do not fit a {}x{} grid",
                self.n_goal, self.n_limited, self.size, self.size
            )));
        }
        if !(0.0..=1.0).contains(&self.slip_p) {
            return Err(Error::InvalidInput(format!("slip probability {} outside [0, 1]", self.slip_p)));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidInput(format!("discount {} outside [0, 1)", self.discount)));
        }
        if !(self.threshold_max > 0.0 && self.threshold_max.is_finite()) {
            return Err(Error::InvalidInput("threshold_max must be positive".into()));
        }
        Ok(())
    }
}

/// A generated gridworld: the CMDP, its true constraints and the tile layout.
#[derive(Clone, Debug)]
pub struct Gridworld {
    pub spec: GridworldSpec,
    pub cmdp: TabularCmdp,
    pub constraints: Vec<LinearObjective>,
    pub goals: Vec<usize>,
    pub limited: Vec<usize>,
}

/// Transition tensor of an `n×n` grid: moves off the grid stay in place, and
/// with probability `slip_p` the action is replaced by a uniform one.
pub fn grid_transitions(size: usize, slip_p: f64) -> Vec<f64> {
    let ns = size * size;
    let target = |s: usize, a: usize| {
        let (col, row) = ((s % size) as i64, (s / size) as i64);
        let (c2, r2) = (col + MOVES[a].0, row + MOVES[a].1);
        if c2 < 0 || r2 < 0 || c2 >= size as i64 || r2 >= size as i64 {
            s
        } else {
            r2 as usize * size + c2 as usize
        }
    };
    let mut t = vec![0.0; ns * N_ACTIONS * ns];
    for s in 0..ns {
        for a in 0..N_ACTIONS {
            let row = &mut t[(s * N_ACTIONS + a) * ns..(s * N_ACTIONS + a + 1) * ns];
            row[target(s, a)] += 1.0 - slip_p;
            for b in 0..N_ACTIONS {
                row[target(s, b)] += slip_p / N_ACTIONS as f64;
            }
        }
    }
    t
}

/// Replicates per-state values across actions, giving per-pair weights.
pub fn lift_state_values(state_values: &[f64], n_actions: usize) -> Vec<f64> {
    state_values.iter().flat_map(|&v| std::iter::repeat_n(v, n_actions)).collect()
}

/// Random gridworld with state-action indicator features, uniform initial
/// state, goal and limited tiles at distinct random cells, and constraint
/// costs `U[0, 1]` on limited tiles (0 elsewhere). Thresholds are resampled
/// until some policy satisfies all constraints.
pub fn gen_gridworld<R: Rng + ?Sized>(spec: &GridworldSpec, rng: &mut R) -> Result<Gridworld> {
    spec.validate()?;
    let ns = spec.size * spec.size;
    let cells = sample(rng, ns, spec.n_goal + spec.n_limited).into_vec();
    let goals = cells[..spec.n_goal].to_vec();
    let limited = cells[spec.n_goal..].to_vec();
    let cmdp = TabularCmdp::with_indicator_features(
        ns,
        N_ACTIONS,
        grid_transitions(spec.size, spec.slip_p),
        vec![1.0 / ns as f64; ns],
        spec.discount,
    )?;
    let costs: Vec<Vec<f64>> = (0..spec.n_constraints)
        .map(|_| {
            let mut c = vec![0.0; ns];
            for &s in &limited {
                c[s] = rng.random::<f64>();
            }
            lift_state_values(&c, N_ACTIONS)
        })
        .collect();
    let zero = LinearObjective::reward(vec![0.0; cmdp.n_features()]);
    for _ in 0..MAX_THRESHOLD_ROUNDS {
        let constraints: Vec<LinearObjective> = costs
            .iter()
            .map(|c| LinearObjective::constraint(c.clone(), rng.random::<f64>() * spec.threshold_max))
            .collect();
        match solve_cmdp(&cmdp, &zero, &constraints) {
            Ok(_) => return Ok(Gridworld { spec: spec.clone(), cmdp, constraints, goals, limited }),
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailure(format!("no feasible thresholds after {MAX_THRESHOLD_ROUNDS} rounds")))
}

impl Gridworld {
    /// Reward with per-state mean 1 on `goals` and 0 elsewhere, plus
    /// Gaussian noise of standard deviation `std`, lifted to state-action
    /// features.
    pub fn sample_reward_with<R: Rng + ?Sized>(&self, goals: &[usize], std: f64, rng: &mut R) -> LinearObjective {
        let ns = self.cmdp.n_states();
        let mut r: Vec<f64> = (0..ns).map(|s| if goals.contains(&s) { 1.0 } else { 0.0 }).collect();
        if std > 0.0 {
            let noise = Normal::new(0.0, std).expect("positive std");
            r.iter_mut().for_each(|v| *v += noise.sample(rng));
        }
        LinearObjective::reward(lift_state_values(&r, self.cmdp.n_actions()))
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, rng: &mut R) -> LinearObjective {
        self.sample_reward_with(&self.goals, REWARD_STD, rng)
    }

    /// A fresh goal set of the same size among the non-limited cells,
    /// different from the current one whenever another choice exists.
    pub fn resample_goals<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let free: Vec<usize> = (0..self.cmdp.n_states()).filter(|s| !self.limited.contains(s)).collect();
        let mut current = self.goals.clone();
        current.sort_unstable();
        for _ in 0..100 {
            let mut g: Vec<usize> = sample(rng, free.len(), self.goals.len()).into_iter().map(|i| free[i]).collect();
            g.sort_unstable();
            if g != current || free.len() == self.goals.len() {
                return g;
            }
        }
        current
    }

    /// The same layout and constraints with a different slip probability.
    pub fn with_slip(&self, slip_p: f64) -> Result<Gridworld> {
        if !(0.0..=1.0).contains(&slip_p) {
            return Err(Error::InvalidInput(format!("slip probability {slip_p} outside [0, 1]")));
        }
        let cmdp = self.cmdp.with_transitions(grid_transitions(self.spec.size, slip_p))?;
        let spec = GridworldSpec { slip_p, ..self.spec.clone() };
        Ok(Gridworld { spec, cmdp, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_moves() {
        let t = grid_transitions(3, 0.0);
        for row in t.chunks_exact(9) {
            assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
        }
        // Centre cell 4 moving left lands on 3; corner 0 moving up stays.
        assert_eq!(t[(4 * 5) * 9 + 3], 1.0);
        assert_eq!(t[(2) * 9], 1.0);
    }

    #[test]
    fn slip_rows_are_distributions() {
        let t = grid_transitions(3, 0.2);
        for row in t.chunks_exact(9) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().filter(|&&p| p > 0.0).count() > 1);
        }
    }

    #[test]
    fn generated_instances_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let g = gen_gridworld(&GridworldSpec::default(), &mut rng).unwrap();
            assert_eq!(g.constraints.len(), 2);
            assert!(g.goals.iter().all(|s| !g.limited.contains(s)));
            let r = g.sample_reward(&mut rng);
            assert!(solve_cmdp(&g.cmdp, &r, &g.constraints).is_ok());
        }
    }

    #[test]
    fn noiseless_rewards_are_goal_indicators() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = gen_gridworld(&GridworldSpec::default(), &mut rng).unwrap();
        let r = g.sample_reward_with(&g.goals, 0.0, &mut rng);
        for s in 0..9 {
            for a in 0..5 {
                let expect = if g.goals.contains(&s) { 1.0 } else { 0.0 };
                assert_eq!(r.weights[s * 5 + a], expect);
            }
        }
    }

    #[test]
    fn new_goals_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = gen_gridworld(&GridworldSpec::default(), &mut rng).unwrap();
        let mut old = g.goals.clone();
        old.sort_unstable();
        let new = g.resample_goals(&mut rng);
        assert_ne!(new, old);
        assert!(new.iter().all(|s| !g.limited.contains(s)));
    }

    #[test]
    fn invalid_specs() {
        let spec = GridworldSpec { n_goal: 5, n_limited: 5, ..Default::default() };
        assert!(gen_gridworld(&spec, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let spec = GridworldSpec { slip_p: 1.5, ..Default::default() };
        assert!(spec.validate().is_err());
    }
}
