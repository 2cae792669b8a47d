use rand::Rng;
use rand_distr::StandardNormal;

use crate::cmdp::{FeatureExpectations, LinearObjective};
use crate::error::{Error, Result};
use crate::solvers::{solve_lp, LinearProgram, LpStatus};

const MAX_CONSTRAINT_ROUNDS: usize = 10_000;

/// A single-state CMDP with `γ = 0` and continuous actions `a ∈ R^d` whose
/// features are the action itself. Constraints are `φ_jᵀa <= 1` with unit
/// normals `φ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleStateProblem {
    pub dim: usize,
    pub constraints: Vec<LinearObjective>,
}

/// Uniform point on the unit sphere in `R^d`.
pub fn unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Random single-state problem with `n` constraints. Normals are redrawn
/// until the feasible set is bounded, which needs `n >= d + 1`.
pub fn gen_single_state<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<SingleStateProblem> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidInput("dimension and constraint count must be positive".into()));
    }
    if n < d + 1 {
        return Err(Error::InvalidInput(format!("{n} halfspaces cannot bound a region in R^{d}")));
    }
    for _ in 0..MAX_CONSTRAINT_ROUNDS {
        let constraints: Vec<LinearObjective> =
            (0..n).map(|_| LinearObjective::constraint(unit_sphere(d, rng), 1.0)).collect();
        let problem = SingleStateProblem { dim: d, constraints };
        if problem.is_bounded()? {
            return Ok(problem);
        }
    }
    Err(Error::GenerationFailure(format!("no bounded feasible set after {MAX_CONSTRAINT_ROUNDS} draws")))
}

impl SingleStateProblem {
    fn lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim);
        lp.free_all();
        for c in &self.constraints {
            lp.leq(c.weights.clone(), c.threshold.unwrap_or(1.0));
        }
        lp
    }

    /// Bounded exactly when the recession cone `{y : Φy <= 0}` is `{0}`.
    pub fn is_bounded(&self) -> Result<bool> {
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::new(self.dim);
                lp.free_all();
                for j in 0..self.dim {
                    lp.set_bounds(j, Some(-1.0), Some(1.0));
                }
                for c in &self.constraints {
                    lp.leq(c.weights.clone(), 0.0);
                }
                let mut obj = vec![0.0; self.dim];
                obj[i] = sign;
                let sol = solve_lp(&lp.maximize(obj))?;
                if sol.objective_value > 1e-9 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `argmax θᵀa` subject to the true constraints.
    pub fn solve(&self, reward: &LinearObjective) -> Result<(Vec<f64>, f64)> {
        if reward.weights.len() != self.dim {
            return Err(Error::InvalidInput("reward dimension mismatch".into()));
        }
        let sol = solve_lp(&self.lp().maximize(reward.weights.clone()))?;
        match sol.status {
            LpStatus::Optimal => {
                let v = sol.objective_value;
                Ok((sol.point.expect("optimal point"), v))
            }
            LpStatus::Unbounded => Err(Error::Unbounded("feasible set is unbounded".into())),
            LpStatus::Infeasible => Err(Error::Infeasible("feasible set is empty".into())),
        }
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, rng: &mut R) -> LinearObjective {
        LinearObjective::reward(unit_sphere(self.dim, rng))
    }

    /// `Σ_j max(φ_jᵀa - ξ_j, 0)`.
    pub fn violation(&self, action: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.excess(action).max(0.0)).sum()
    }

    /// `k` optimal actions for independently drawn rewards, with the rewards.
    pub fn demos<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<(FeatureExpectations, LinearObjective)>> {
        (0..k)
            .map(|_| {
                let r = self.sample_reward(rng);
                let (a, _) = self.solve(&r)?;
                Ok((FeatureExpectations::exact(a), r))
            })
            .collect()
    }
}
