use super::{IrlEngine, IrlResult, IrlVariant};
use crate::cmdp::{feature_expectations, FeatureExpectations, LinearObjective, Policy, TabularCmdp};
use crate::error::{Error, Result};

const SOFT_VI_TOL: f64 = 1e-8;
const SOFT_VI_MAX_ITERS: usize = 1_000_000;
const PARAM_TOL: f64 = 1e-6;

/// Hyperparameters of the round-robin max-entropy learner. The variant is
/// implied by the learning rates and initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntConfig {
    pub alpha_theta: f64,
    pub alpha_phi: f64,
    /// Initial per-demonstration parameters, one vector per demonstration.
    pub theta0: Vec<Vec<f64>>,
    pub phi0: Vec<f64>,
    /// Passes over all demonstrations.
    pub sweeps: usize,
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_SWEEPS: usize = 500;

impl MaxEntConfig {
    /// `α_θ > 0`, `α_φ = 0`, zero initialization.
    pub fn average(k: usize, d: usize) -> Self {
        Self {
            alpha_theta: DEFAULT_LEARNING_RATE,
            alpha_phi: 0.0,
            theta0: vec![vec![0.0; d]; k],
            phi0: vec![0.0; d],
            sweeps: DEFAULT_SWEEPS,
        }
    }

    /// `α_θ > 0`, `α_φ > 0`, zero initialization.
    pub fn shared(k: usize, d: usize) -> Self {
        Self { alpha_phi: DEFAULT_LEARNING_RATE, ..Self::average(k, d) }
    }

    /// `α_θ = 0`, `α_φ > 0`, `θ_i` fixed to the known rewards.
    pub fn known(known: &[LinearObjective]) -> Self {
        let d = known.first().map_or(0, |r| r.weights.len());
        Self {
            alpha_theta: 0.0,
            alpha_phi: DEFAULT_LEARNING_RATE,
            theta0: known.iter().map(|r| r.weights.clone()).collect(),
            phi0: vec![0.0; d],
            sweeps: DEFAULT_SWEEPS,
        }
    }

    fn variant(&self) -> IrlVariant {
        match (self.alpha_theta > 0.0, self.alpha_phi > 0.0) {
            (_, false) => IrlVariant::Average,
            (true, true) => IrlVariant::SharedReward,
            (false, true) => IrlVariant::KnownReward,
        }
    }
}

/// Soft-optimal (temperature 1) policy for per-pair rewards:
/// `Q = r + γ P V`, `V = log Σ_a exp Q`, `π(a|s) = exp(Q(s,a) - V(s))`.
pub fn soft_optimal_policy(cmdp: &TabularCmdp, pair_rewards: &[f64]) -> Result<Policy> {
    let (ns, na) = (cmdp.n_states(), cmdp.n_actions());
    let mut v = vec![0.0; ns];
    let mut q = vec![0.0; cmdp.n_pairs()];
    for _ in 0..SOFT_VI_MAX_ITERS {
        for s in 0..ns {
            for a in 0..na {
                let next: f64 = cmdp.next_dist(s, a).iter().zip(&v).map(|(p, x)| p * x).sum();
                q[cmdp.pair(s, a)] = pair_rewards[cmdp.pair(s, a)] + cmdp.discount() * next;
            }
        }
        let mut delta = 0.0f64;
        for s in 0..ns {
            let row = &q[s * na..(s + 1) * na];
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            if !lse.is_finite() {
                return Err(Error::NumericalFailure("soft value iteration diverged".into()));
            }
            delta = delta.max((lse - v[s]).abs());
            v[s] = lse;
        }
        if delta < SOFT_VI_TOL {
            let probs = (0..cmdp.n_pairs()).map(|p| (q[p] - v[p / na]).exp()).collect();
            return Policy::new(ns, na, probs).or_else(|_| {
                // Renormalize rows that drifted by rounding.
                let w: Vec<f64> = (0..cmdp.n_pairs()).map(|p| (q[p] - v[p / na]).exp()).collect();
                Ok(Policy::from_weights(ns, na, &w))
            });
        }
    }
    Err(Error::NumericalFailure("soft value iteration did not converge".into()))
}

/// Round-robin max-entropy IRL: for each demonstration in turn, fit the
/// soft-optimal policy for `(θ_i + φ)ᵀf`, then move `θ_i` and `φ` along
/// `f(π_i*) - f(π̂)`. Stops when a full sweep changes no parameter by more
/// than 1e-6, or after `sweeps` passes.
pub fn max_entropy_irl(cmdp: &TabularCmdp, demos: &[FeatureExpectations], config: &MaxEntConfig) -> Result<IrlResult> {
    let d = cmdp.n_features();
    if demos.is_empty() || config.theta0.len() != demos.len() {
        return Err(Error::InvalidInput("need one initial θ per demonstration".into()));
    }
    if demos.iter().any(|f| f.dim() != d) || config.theta0.iter().any(|t| t.len() != d) || config.phi0.len() != d {
        return Err(Error::InvalidInput("parameter dimensions do not match the features".into()));
    }
    if config.sweeps == 0 {
        return Err(Error::InvalidInput("at least one sweep is required".into()));
    }
    let mut theta = config.theta0.clone();
    let mut phi = config.phi0.clone();
    for _ in 0..config.sweeps {
        let mut biggest = 0.0f64;
        for (i, demo) in demos.iter().enumerate() {
            let weights: Vec<f64> = theta[i].iter().zip(&phi).map(|(t, p)| t + p).collect();
            let policy = soft_optimal_policy(cmdp, &cmdp.pair_values(&weights))?;
            let fitted = feature_expectations(cmdp, &policy)?;
            for j in 0..d {
                let g = demo.values[j] - fitted.values[j];
                theta[i][j] += config.alpha_theta * g;
                phi[j] += config.alpha_phi * g;
                biggest = biggest.max((config.alpha_theta * g).abs()).max((config.alpha_phi * g).abs());
            }
        }
        if biggest < PARAM_TOL {
            break;
        }
    }
    let variant = config.variant();
    Ok(IrlResult {
        per_demo_rewards: theta,
        shared_penalty: (variant != IrlVariant::Average).then_some(phi),
        variant,
        engine: IrlEngine::MaxEntropy,
        margins: Vec::new(),
    })
}
