//! Inverse-RL baselines that learn a reward penalty instead of constraints.

mod max_ent;
mod max_margin;

pub use max_ent::{max_entropy_irl, soft_optimal_policy, MaxEntConfig, DEFAULT_LEARNING_RATE, DEFAULT_SWEEPS};
pub use max_margin::{expert_margin, max_margin_average, max_margin_irl, max_margin_known, max_margin_shared};

use crate::cmdp::LinearObjective;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IrlVariant {
    Average,
    SharedReward,
    KnownReward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IrlEngine {
    MaxMargin,
    MaxEntropy,
}

/// Learned reward parameters, all as feature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct IrlResult {
    /// `θ̂_i` (or `r̂_i`) per demonstration.
    pub per_demo_rewards: Vec<Vec<f64>>,
    /// `φ̂` (or `ĉ`); absent for Average IRL.
    pub shared_penalty: Option<Vec<f64>>,
    pub variant: IrlVariant,
    pub engine: IrlEngine,
    /// Max-margin only: each expert's achieved margin.
    pub margins: Vec<f64>,
}

/// Reward used downstream: `r_eval + φ̂` for Shared and Known Reward IRL,
/// `r_eval + (1/k) Σ_i θ̂_i` for Average IRL.
pub fn apply_irl_constraints(result: &IrlResult, r_eval: &LinearObjective) -> Result<LinearObjective> {
    let d = r_eval.weights.len();
    let add: Vec<f64> = match (&result.variant, &result.shared_penalty) {
        (IrlVariant::Average, _) => {
            let k = result.per_demo_rewards.len();
            if k == 0 {
                return Err(Error::InvalidInput("Average IRL result has no rewards".into()));
            }
            (0..d).map(|j| result.per_demo_rewards.iter().map(|t| t.get(j).copied().unwrap_or(f64::NAN)).sum::<f64>() / k as f64).collect()
        }
        (_, Some(p)) => p.clone(),
        (_, None) => return Err(Error::InvalidInput("IRL result lacks a shared penalty".into())),
    };
    if add.len() != d || add.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("IRL parameters do not match the reward dimension".into()));
    }
    Ok(LinearObjective::reward(r_eval.weights.iter().zip(&add).map(|(a, b)| a + b).collect()))
}
