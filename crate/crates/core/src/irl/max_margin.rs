//! Maximum-margin IRL as linear programs.
//!
//! Learned reward components are state-dependent, `r(s, a, s') = r(s')`, so
//! a learned state vector `x` acts as the pair reward
//! `R(s, a) = Σ_{s'} P(s'|s, a) x(s')`. The advantage of the expert over
//! action `a` is then linear in `x`:
//! `V(s) - Q(s, a) = [(P^π - P^a) D^π x](s)` with
//! `D^π = I + γ (I - γ P^π)⁻¹ P^π`.
//!
//! Each state gets its own margin variable `ζ_s <= V(s) - Q(s, a)`. Rows
//! whose advantage is identically zero (the expert's own action in a
//! deterministic state, or actions with the same transitions) are left out;
//! keeping them would pin every margin at zero.

use nalgebra::DMatrix;

use super::{IrlEngine, IrlResult, IrlVariant};
use crate::cmdp::{policy_transition_matrix, policy_values, q_values, LinearObjective, Policy, TabularCmdp};
use crate::error::{Error, Result};
use crate::solvers::{solve_lp, LinearProgram, LpStatus};

const ZERO_ROW: f64 = 1e-12;

/// Max-margin reward for a single expert, as per-pair feature weights.
pub fn max_margin_irl(cmdp: &TabularCmdp, expert: &Policy) -> Result<Vec<f64>> {
    let r = max_margin_average(cmdp, std::slice::from_ref(expert))?;
    Ok(r.per_demo_rewards.into_iter().next().expect("one reward"))
}

/// Average IRL: one independent max-margin reward per expert.
pub fn max_margin_average(cmdp: &TabularCmdp, experts: &[Policy]) -> Result<IrlResult> {
    require_indicator_features(cmdp)?;
    let mut rewards = Vec::with_capacity(experts.len());
    let mut margins = Vec::with_capacity(experts.len());
    for expert in experts {
        let adv = Advantage::new(cmdp, expert, None)?;
        let ns = cmdp.n_states();
        let (x, m) = solve_margin_lp(&[adv], ns, Layout::OwnRewards)?;
        rewards.push(state_to_pairs(cmdp, &x[0]));
        margins.push(m[0]);
    }
    Ok(IrlResult {
        per_demo_rewards: rewards,
        shared_penalty: None,
        variant: IrlVariant::Average,
        engine: IrlEngine::MaxMargin,
        margins,
    })
}

/// Shared Reward IRL: per-expert rewards `r̂_i` plus a shared penalty `ĉ`,
/// all learned jointly.
pub fn max_margin_shared(cmdp: &TabularCmdp, experts: &[Policy]) -> Result<IrlResult> {
    require_indicator_features(cmdp)?;
    if experts.is_empty() {
        return Err(Error::InvalidInput("need at least one expert".into()));
    }
    let advs = experts.iter().map(|e| Advantage::new(cmdp, e, None)).collect::<Result<Vec<_>>>()?;
    let (x, margins) = solve_margin_lp(&advs, cmdp.n_states(), Layout::OwnPlusShared)?;
    let k = experts.len();
    Ok(IrlResult {
        per_demo_rewards: x[..k].iter().map(|v| state_to_pairs(cmdp, v)).collect(),
        shared_penalty: Some(state_to_pairs(cmdp, &x[k])),
        variant: IrlVariant::SharedReward,
        engine: IrlEngine::MaxMargin,
        margins,
    })
}

/// Known Reward IRL: only the shared penalty `ĉ` is learned; each expert's
/// own reward is given (as per-pair feature weights).
pub fn max_margin_known(cmdp: &TabularCmdp, experts: &[Policy], known: &[LinearObjective]) -> Result<IrlResult> {
    require_indicator_features(cmdp)?;
    if experts.is_empty() || experts.len() != known.len() {
        return Err(Error::InvalidInput("need one known reward per expert".into()));
    }
    let advs = experts
        .iter()
        .zip(known)
        .map(|(e, r)| Advantage::new(cmdp, e, Some(&r.weights)))
        .collect::<Result<Vec<_>>>()?;
    let (x, margins) = solve_margin_lp(&advs, cmdp.n_states(), Layout::SharedOnly)?;
    Ok(IrlResult {
        per_demo_rewards: known.iter().map(|r| r.weights.clone()).collect(),
        shared_penalty: Some(state_to_pairs(cmdp, &x[0])),
        variant: IrlVariant::KnownReward,
        engine: IrlEngine::MaxMargin,
        margins,
    })
}

/// Smallest advantage `V(s) - Q(s, a)` of `expert` under per-pair rewards,
/// over all pairs except the expert's action in deterministic states.
/// Nonnegative exactly when the expert is optimal.
pub fn expert_margin(cmdp: &TabularCmdp, expert: &Policy, pair_rewards: &[f64]) -> Result<f64> {
    let v = policy_values(cmdp, expert, pair_rewards)?;
    let q = q_values(cmdp, pair_rewards, &v);
    let mut worst = f64::INFINITY;
    for s in 0..cmdp.n_states() {
        for a in 0..cmdp.n_actions() {
            if expert.prob(s, a) < 1.0 {
                worst = worst.min(v[s] - q[cmdp.pair(s, a)]);
            }
        }
    }
    Ok(worst)
}

fn require_indicator_features(cmdp: &TabularCmdp) -> Result<()> {
    let d = cmdp.n_features();
    let ok = d == cmdp.n_pairs()
        && cmdp.features().chunks_exact(d).enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput("max-margin IRL needs state-action indicator features".into()))
    }
}

fn state_to_pairs(cmdp: &TabularCmdp, x: &[f64]) -> Vec<f64> {
    (0..cmdp.n_pairs())
        .map(|p| {
            let (s, a) = (p / cmdp.n_actions(), p % cmdp.n_actions());
            cmdp.next_dist(s, a).iter().zip(x).map(|(pr, xv)| pr * xv).sum()
        })
        .collect()
}

/// Advantage rows `V(s) - Q(s, a) = coef·x + constant` for one expert.
struct Advantage {
    /// `(state, coefficients over learned state rewards, constant)`.
    rows: Vec<(usize, Vec<f64>, f64)>,
}

impl Advantage {
    fn new(cmdp: &TabularCmdp, expert: &Policy, known: Option<&[f64]>) -> Result<Self> {
        if expert.n_states() != cmdp.n_states() || expert.n_actions() != cmdp.n_actions() {
            return Err(Error::InvalidInput("expert policy does not match the CMDP".into()));
        }
        let ns = cmdp.n_states();
        let gamma = cmdp.discount();
        let p_pi = policy_transition_matrix(cmdp, expert);
        let lhs = DMatrix::<f64>::identity(ns, ns) - &p_pi * gamma;
        let solved = lhs
            .lu()
            .solve(&p_pi)
            .ok_or_else(|| Error::NumericalFailure("singular policy evaluation system".into()))?;
        let d_pi = DMatrix::<f64>::identity(ns, ns) + solved * gamma;
        let known_gap = match known {
            Some(r) => {
                let v = policy_values(cmdp, expert, r)?;
                let q = q_values(cmdp, r, &v);
                Some((v, q))
            }
            None => None,
        };
        let mut rows = Vec::new();
        for s in 0..ns {
            for a in 0..cmdp.n_actions() {
                let diff: Vec<f64> = (0..ns).map(|s2| p_pi[(s, s2)] - cmdp.next_dist(s, a)[s2]).collect();
                let coef: Vec<f64> = (0..ns).map(|j| (0..ns).map(|m| diff[m] * d_pi[(m, j)]).sum()).collect();
                let constant = known_gap.as_ref().map_or(0.0, |(v, q)| v[s] - q[cmdp.pair(s, a)]);
                if coef.iter().all(|c| c.abs() <= ZERO_ROW) && constant.abs() <= ZERO_ROW {
                    continue;
                }
                rows.push((s, coef, constant));
            }
        }
        Ok(Self { rows })
    }
}

/// Which learned vectors enter an expert's advantage.
#[derive(Clone, Copy, PartialEq)]
enum Layout {
    /// Expert `i` has its own reward vector only.
    OwnRewards,
    /// Own reward vectors plus one shared vector.
    OwnPlusShared,
    /// All experts use only the shared vector.
    SharedOnly,
}

/// Solves the margin LP and returns the learned state vectors (own vectors
/// first, then the shared one if any) and each expert's margin.
fn solve_margin_lp(advs: &[Advantage], ns: usize, layout: Layout) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let shared_only = layout == Layout::SharedOnly;
    let n_own = if shared_only { 0 } else { advs.len() };
    let with_shared = layout != Layout::OwnRewards;
    let n_vectors = n_own + usize::from(with_shared);
    let shared_idx = n_own;

    // Margin variables: one per (expert, state) that has rows.
    let mut zeta_index = Vec::with_capacity(advs.len());
    let mut n_zeta = 0;
    for adv in advs {
        let mut idx = vec![usize::MAX; ns];
        for (s, _, _) in &adv.rows {
            if idx[*s] == usize::MAX {
                idx[*s] = n_zeta;
                n_zeta += 1;
            }
        }
        zeta_index.push(idx);
    }
    let n_x = n_vectors * ns;
    let n_vars = n_x + n_zeta;
    let mut lp = LinearProgram::new(n_vars);
    for j in 0..n_vars {
        if j < n_x {
            lp.set_bounds(j, Some(-1.0), Some(1.0));
        } else {
            lp.set_bounds(j, None, None);
        }
    }
    for (i, adv) in advs.iter().enumerate() {
        let vectors: Vec<usize> = match (shared_only, with_shared) {
            (true, _) => vec![shared_idx],
            (false, true) => vec![i, shared_idx],
            (false, false) => vec![i],
        };
        for (s, coef, constant) in &adv.rows {
            // ζ - coef·x <= constant
            let mut row = vec![0.0; n_vars];
            row[n_x + zeta_index[i][*s]] = 1.0;
            for &v in &vectors {
                for (j, c) in coef.iter().enumerate() {
                    row[v * ns + j] -= c;
                }
            }
            lp.leq(row, *constant);
        }
    }
    let mut obj = vec![0.0; n_vars];
    obj[n_x..].iter_mut().for_each(|v| *v = 1.0);
    let sol = solve_lp(&lp.maximize(obj))?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!("margin LP ended {:?}", sol.status)));
    }
    let x = sol.point.expect("optimal point");
    let vectors: Vec<Vec<f64>> = (0..n_vectors).map(|v| x[v * ns..(v + 1) * ns].to_vec()).collect();
    let margins = zeta_index
        .iter()
        .map(|idx| idx.iter().filter(|&&z| z != usize::MAX).map(|&z| x[n_x + z]).fold(f64::INFINITY, f64::min))
        .map(|m| if m.is_finite() { m } else { 0.0 })
        .collect();
    Ok((vectors, margins))
}
