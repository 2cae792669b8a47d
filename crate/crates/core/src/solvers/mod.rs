//! Numerical kernel: dense linear programming, minimum-norm points in convex
//! hulls, and singular value decomposition.
//!
//! Tolerances used throughout the crate: feasibility `1e-8`, objective
//! `1e-7`, and a singular value counts as zero below `1e-9 * sigma_max`.

mod min_norm;
mod simplex;
mod svd;

pub use min_norm::{min_norm_point, MinNormPoint};
pub use simplex::{solve_lp, LinearProgram, LpSolution, LpStatus, TOL_FEAS, TOL_OBJ};
pub use svd::{svd, Svd};

pub(crate) use simplex::dot;
pub(crate) use svd::complete_basis;

/// Relative threshold under which a singular value is treated as zero.
pub const RANK_TOL: f64 = 1e-9;
