use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cmdp::{features_of_occupancy, policy_from_occupancy, solve_cmdp, FeatureExpectations, LinearObjective, Policy, TabularCmdp};
use crate::error::{Error, Result};
use crate::solvers::{dot, solve_lp, svd, LinearProgram, LpStatus, RANK_TOL};

pub const BURN_IN: usize = 1000;
pub const THINNING: usize = 10;
/// Tolerance of the safety check every emitted demonstration must pass.
const SAFETY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DemoMode {
    /// Each demonstration is optimal in the true CMDP for its reward.
    ExactOptimal,
    /// Each demonstration is drawn with density `∝ exp(β G_r(π))` over the
    /// feasible policies.
    Boltzmann { beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemoSpec {
    pub mode: DemoMode,
    pub k: usize,
}

/// One demonstration with the reward that produced it.
#[derive(Clone, Debug)]
pub struct Demo {
    pub features: FeatureExpectations,
    pub reward: LinearObjective,
    pub policy: Policy,
    pub occupancy: Vec<f64>,
}

pub fn gen_demos<R, F>(
    cmdp: &TabularCmdp,
    constraints: &[LinearObjective],
    spec: &DemoSpec,
    mut reward_sampler: F,
    rng: &mut R,
) -> Result<Vec<Demo>>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> LinearObjective,
{
    if spec.k == 0 {
        return Err(Error::InvalidInput("need at least one demonstration".into()));
    }
    let mut sampler = match spec.mode {
        DemoMode::Boltzmann { beta } if !(beta > 0.0 && beta.is_finite()) => {
            return Err(Error::InvalidInput(format!("beta {beta} must be positive")));
        }
        DemoMode::Boltzmann { .. } => Some(HitAndRun::new(cmdp, constraints)?),
        DemoMode::ExactOptimal => None,
    };
    let mut demos = Vec::with_capacity(spec.k);
    for _ in 0..spec.k {
        let reward = reward_sampler(rng);
        let mu = match (spec.mode, sampler.as_mut()) {
            (DemoMode::Boltzmann { beta }, Some(s)) => s.sample(&cmdp.pair_values(&reward.weights), beta, rng)?,
            _ => {
                let (_, sol) = solve_cmdp(cmdp, &reward, constraints)?;
                sol.point.expect("optimal point")
            }
        };
        let features = FeatureExpectations::exact(features_of_occupancy(cmdp, &mu));
        for (j, c) in constraints.iter().enumerate() {
            let excess = c.excess(&features.values);
            if excess > SAFETY_TOL {
                return Err(Error::GenerationFailure(format!("demonstration violates constraint {j} by {excess:e}")));
            }
        }
        demos.push(Demo { features, reward, policy: policy_from_occupancy(cmdp, &mu), occupancy: mu });
    }
    Ok(demos)
}

/// Hit-and-run over the feasible occupancy polytope
/// `{μ >= 0, flow equations, Σ μ c_j <= ξ_j}`.
///
/// Directions are uniform in the null space of the flow equations. The
/// target density is log-linear, so its restriction to a chord is a
/// truncated exponential that can be sampled exactly; no accept/reject step
/// is needed.
pub(crate) struct HitAndRun {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    null_basis: Vec<Vec<f64>>,
    start: Vec<f64>,
}

impl HitAndRun {
    pub(crate) fn new(cmdp: &TabularCmdp, constraints: &[LinearObjective]) -> Result<Self> {
        let n = cmdp.n_pairs();
        // Flow equations, as in the occupancy LP.
        let mut flow = DMatrix::zeros(cmdp.n_states(), n);
        for s in 0..cmdp.n_states() {
            for a in 0..cmdp.n_actions() {
                flow[(s, cmdp.pair(s, a))] += 1.0;
            }
            for s2 in 0..cmdp.n_states() {
                for a2 in 0..cmdp.n_actions() {
                    flow[(s, cmdp.pair(s2, a2))] -= cmdp.discount() * cmdp.next_dist(s2, a2)[s];
                }
            }
        }
        let dec = svd(&flow)?;
        let rank = dec.rank(RANK_TOL);
        let null_basis: Vec<Vec<f64>> = (rank..n).map(|i| dec.v.row(i).iter().copied().collect()).collect();
        if null_basis.is_empty() {
            return Err(Error::GenerationFailure("the flow equations admit a single occupancy".into()));
        }

        let mut rows = Vec::with_capacity(n + constraints.len());
        let mut rhs = Vec::with_capacity(rows.capacity());
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = -1.0;
            rows.push(r);
            rhs.push(0.0);
        }
        for c in constraints {
            let t = c.threshold.ok_or_else(|| Error::InvalidInput("constraint without threshold".into()))?;
            rows.push(cmdp.pair_values(&c.weights));
            rhs.push(t);
        }

        // Deepest point: maximize the smallest slack t (capped at 1).
        let mut lp = LinearProgram::new(n + 1);
        lp.set_bounds(n, None, Some(1.0));
        for (row, &h) in rows.iter().zip(&rhs) {
            let mut r = row.clone();
            r.push(1.0);
            lp.leq(r, h);
        }
        for s in 0..cmdp.n_states() {
            let mut r: Vec<f64> = flow.row(s).iter().copied().collect();
            r.push(0.0);
            lp.eq(r, cmdp.initial_dist()[s]);
        }
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let sol = solve_lp(&lp.maximize(obj))?;
        if sol.status != LpStatus::Optimal || sol.objective_value <= 1e-9 {
            return Err(Error::GenerationFailure("feasible occupancies have no interior".into()));
        }
        let mut start = sol.point.expect("optimal point");
        start.truncate(n);
        Ok(Self { rows, rhs, null_basis, start })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&mut self, pair_rewards: &[f64], beta: f64, rng: &mut R) -> Result<Vec<f64>> {
        let mut mu = self.start.clone();
        let mut stuck = 0usize;
        for _ in 0..BURN_IN + THINNING {
            let z: Vec<f64> = (0..self.null_basis.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let mut u = vec![0.0; mu.len()];
            for (zi, b) in z.iter().zip(&self.null_basis) {
                u.iter_mut().zip(b).for_each(|(ui, bi)| *ui += zi * bi);
            }
            let norm = dot(&u, &u).sqrt();
            if norm == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|v| *v /= norm);
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (row, &h) in self.rows.iter().zip(&self.rhs) {
                let rate = dot(row, &u);
                let slack = (h - dot(row, &mu)).max(0.0);
                if rate > 1e-14 {
                    hi = hi.min(slack / rate);
                } else if rate < -1e-14 {
                    lo = lo.max(slack / rate);
                }
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::GenerationFailure("feasible occupancies are unbounded".into()));
            }
            let len = hi - lo;
            if len <= 1e-14 {
                stuck += 1;
                if stuck > 100 {
                    return Err(Error::GenerationFailure("hit-and-run chain is stuck".into()));
                }
                continue;
            }
            stuck = 0;
            let slope = beta * dot(pair_rewards, &u);
            let t = truncated_exponential(slope, len, rng.random::<f64>());
            let step = if slope > 0.0 { hi - t } else { lo + t };
            mu.iter_mut().zip(&u).for_each(|(m, ui)| *m += step.clamp(lo, hi) * ui);
        }
        mu.iter_mut().for_each(|m| *m = m.max(0.0));
        self.start = mu.clone();
        Ok(mu)
    }
}

/// Distance from the favoured end of an interval of length `len` under the
/// density `∝ exp(-|slope| w)`, by inversion of the uniform draw `u`.
fn truncated_exponential(slope: f64, len: f64, u: f64) -> f64 {
    let rate = slope.abs();
    if rate * len < 1e-12 {
        return u * len;
    }
    let w = -(u * (-rate * len).exp_m1()).ln_1p() / rate;
    w.clamp(0.0, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncated_exponential_limits() {
        assert_eq!(truncated_exponential(0.0, 2.0, 0.5), 1.0);
        // Steep densities concentrate at the favoured end.
        assert!(truncated_exponential(1e6, 1.0, 0.999) < 1e-5);
        let median = truncated_exponential(1.0, f64::MAX.sqrt(), 0.5);
        assert!((median - 2f64.ln()).abs() < 1e-12);
    }

    fn bandit() -> (TabularCmdp, Vec<LinearObjective>) {
        let c = TabularCmdp::with_indicator_features(1, 2, vec![1.0, 1.0], vec![1.0], 0.0).unwrap();
        (c, vec![LinearObjective::constraint(vec![0.0, 1.0], 0.7)])
    }

    #[test]
    fn exact_demos_are_safe_and_optimal() {
        let (c, cons) = bandit();
        let spec = DemoSpec { mode: DemoMode::ExactOptimal, k: 3 };
        let demos =
            gen_demos(&c, &cons, &spec, |_| LinearObjective::reward(vec![0.0, 1.0]), &mut ChaCha8Rng::seed_from_u64(0))
                .unwrap();
        for d in demos {
            assert!((d.features.values[1] - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn boltzmann_demos_respect_constraints_and_prefer_reward() {
        let (c, cons) = bandit();
        let spec = DemoSpec { mode: DemoMode::Boltzmann { beta: 50.0 }, k: 40 };
        let demos =
            gen_demos(&c, &cons, &spec, |_| LinearObjective::reward(vec![0.0, 1.0]), &mut ChaCha8Rng::seed_from_u64(1))
                .unwrap();
        let near_best = demos.iter().filter(|d| d.features.values[1] > 0.6).count();
        assert!(near_best >= 36, "{near_best}");
        assert!(demos.iter().all(|d| d.features.values[1] <= 0.7 + 1e-9));
    }
}
