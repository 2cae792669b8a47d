//! Cross-entropy search over real parameter vectors with constraint-aware
//! ranking: fewest violated constraints first, then smallest total
//! violation, then highest return.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Standard deviations below this count as collapsed.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CemConfig {
    pub n_iter: usize,
    pub n_samp: usize,
    pub n_elite: usize,
    pub init_mean: Vec<f64>,
    pub init_std: Vec<f64>,
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_elite == 0 || self.n_elite > self.n_samp {
            return Err(Error::InvalidInput("need n_iter >= 1 and 1 <= n_elite <= n_samp".into()));
        }
        if self.init_mean.is_empty() || self.init_mean.len() != self.init_std.len() {
            return Err(Error::InvalidInput("mean and std must have the same positive length".into()));
        }
        if self.init_std.iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.init_mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidInput("initial std must be positive and parameters finite".into()));
        }
        Ok(())
    }
}

/// Outcome of evaluating one parameter vector. Each `cost_violations[j]` is
/// `J_j - ξ_j`, positive when constraint `j` is violated.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub return_value: f64,
    pub cost_violations: Vec<f64>,
}

impl Evaluation {
    pub fn n_violated(&self) -> usize {
        self.cost_violations.iter().filter(|&&j| j > 0.0).count()
    }

    pub fn total_violation(&self) -> f64 {
        self.cost_violations.iter().map(|j| j.max(0.0)).sum()
    }
}

/// Total order used to rank candidates: violated count ascending, total
/// violation ascending, return descending, then sample index.
pub fn rank_order(a: (usize, &Evaluation), b: (usize, &Evaluation)) -> Ordering {
    a.1.n_violated()
        .cmp(&b.1.n_violated())
        .then(a.1.total_violation().total_cmp(&b.1.total_violation()))
        .then(b.1.return_value.total_cmp(&a.1.return_value))
        .then(a.0.cmp(&b.0))
}

/// Indices of the elite set. When the `n_elite`-th ranked candidate is
/// feasible, elites are the best-returning feasible candidates.
pub fn select_elites(evals: &[Evaluation], n_elite: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..evals.len()).collect();
    let constrained = evals.iter().any(|e| !e.cost_violations.is_empty());
    if !constrained {
        order.sort_by(|&i, &j| evals[j].return_value.total_cmp(&evals[i].return_value).then(i.cmp(&j)));
        order.truncate(n_elite);
        return order;
    }
    order.sort_by(|&i, &j| rank_order((i, &evals[i]), (j, &evals[j])));
    if evals[order[n_elite - 1]].n_violated() == 0 {
        let mut feasible: Vec<usize> = order.iter().copied().filter(|&i| evals[i].n_violated() == 0).collect();
        feasible.sort_by(|&i, &j| evals[j].return_value.total_cmp(&evals[i].return_value).then(i.cmp(&j)));
        feasible.truncate(n_elite);
        return feasible;
    }
    order.truncate(n_elite);
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub elite_mean_return: f64,
    pub n_feasible: usize,
    pub max_std: f64,
}

#[derive(Clone, Debug)]
pub struct CemOutcome {
    /// Final search mean.
    pub params: Vec<f64>,
    pub history: Vec<IterationStats>,
    /// Best candidate seen under the ranking order.
    pub best_params: Vec<f64>,
    pub best_evaluation: Evaluation,
    /// Set when every standard deviation fell below `STD_FLOOR` before the
    /// last iteration; the search stopped there.
    pub collapsed: bool,
}

pub fn constrained_cem<F, R>(mut evaluate: F, config: &CemConfig, rng: &mut R) -> Result<CemOutcome>
where
    F: FnMut(&[f64]) -> Evaluation,
    R: Rng + ?Sized,
{
    config.validate()?;
    let d = config.init_mean.len();
    let mut mean = config.init_mean.clone();
    let mut std = config.init_std.clone();
    let mut history = Vec::with_capacity(config.n_iter);
    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut collapsed = false;
    for iter in 0..config.n_iter {
        let samples: Vec<Vec<f64>> = (0..config.n_samp)
            .map(|_| (0..d).map(|j| mean[j] + std[j] * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let evals: Vec<Evaluation> = samples.iter().map(|w| evaluate(w)).collect();
        if evals.iter().any(|e| !e.return_value.is_finite() || e.cost_violations.iter().any(|j| !j.is_finite())) {
            return Err(Error::NumericalFailure("evaluator returned a non-finite value".into()));
        }
        let elites = select_elites(&evals, config.n_elite);
        let top = elites[0];
        let improves = best.as_ref().is_none_or(|(_, b)| rank_order((0, &evals[top]), (1, b)) == Ordering::Less);
        if improves {
            best = Some((samples[top].clone(), evals[top].clone()));
        }
        let n = elites.len() as f64;
        for j in 0..d {
            let m = elites.iter().map(|&i| samples[i][j]).sum::<f64>() / n;
            let var = if elites.len() > 1 {
                elites.iter().map(|&i| (samples[i][j] - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            mean[j] = m;
            std[j] = var.sqrt().max(STD_FLOOR);
        }
        let max_std = std.iter().copied().fold(0.0, f64::max);
        history.push(IterationStats {
            elite_mean_return: elites.iter().map(|&i| evals[i].return_value).sum::<f64>() / n,
            n_feasible: evals.iter().filter(|e| e.n_violated() == 0).count(),
            max_std,
        });
        if max_std <= STD_FLOOR && iter + 1 < config.n_iter {
            collapsed = true;
            break;
        }
    }
    let (best_params, best_evaluation) = best.expect("at least one iteration");
    Ok(CemOutcome { params: mean, history, best_params, best_evaluation, collapsed })
}
