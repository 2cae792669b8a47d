//! Constraint inference from demonstrations: the safe set, the CMDP it
//! induces, the complementary unsafe set, and sample-complexity bounds.

mod bounds;
mod safe_set;
mod unsafe_set;

pub use bounds::{
    bounds_estimated, bounds_estimated_for_vertices, mcmullen_vertex_bound, sample_bound_boltzmann,
    sample_bound_boltzmann_for_vertices, sample_bound_exact, sample_bound_exact_for_vertices, traj_bound_eps_safety,
    DemoModel, EstimatedBounds,
};
pub use safe_set::{
    build_safe_set, inferred_cmdp, regret, solve_for_reward, solve_linear_for_reward, InferredConstraints, SafeSet,
    DEFAULT_D_STOP, DEFAULT_MAX_POINTS,
};
pub use unsafe_set::{unsafe_set_membership, ALPHA_MIN};
