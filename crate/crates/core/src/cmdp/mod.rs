//! Tabular constrained MDPs: model types, exact policy evaluation through
//! occupancy measures, CMDP solving by linear programming, and sample-based
//! feature-expectation estimation.

mod eval;
pub mod io;
mod model;
mod sampling;
mod solve;

pub use eval::{
    evaluate, feature_expectations, features_of_occupancy, greedy_policy, occupancy_measure, policy_transition_matrix,
    policy_values, q_values, solve_mdp, value_iteration,
};
pub use io::{read_cmdp, write_cmdp, CmdpDocument};
pub use model::{FeatureExpectations, LinearObjective, Policy, Provenance, TabularCmdp, Trajectory};
pub use sampling::{
    confidence_boxes, confidence_half_width, default_horizon, estimate_feature_expectations, rollout,
    trajectory_features,
};
#[allow(unused_imports)]
pub(crate) use sampling::sample_index;
pub use solve::{occupancy_lp, policy_from_occupancy, solve_cmdp};
