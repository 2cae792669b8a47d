//! Convex polytopes in feature space.

mod guaranteed;
mod hull;
mod polytope;

pub use guaranteed::{guaranteed_hull, CORNER_BUDGET};
pub use hull::{convex_hull, DEFAULT_EPS};
pub use polytope::{intersect, read_polytope, write_polytope, AxisBox, Polytope};

use crate::error::{Error, Result};
use crate::solvers::min_norm_point;

/// Distances below this (relative to the candidate's magnitude) are rounding
/// noise from the min-norm solver and count as zero.
pub const ZERO_DISTANCE: f64 = 1e-10;

/// Winner of a furthest-point query.
#[derive(Clone, Debug, PartialEq)]
pub struct FurthestPoint {
    pub index: usize,
    pub point: Vec<f64>,
    pub distance: f64,
}

/// The candidate farthest (in Euclidean distance) from `conv(vertices)`,
/// lowest index first among ties.
pub fn furthest_point(candidates: &[Vec<f64>], vertices: &[Vec<f64>]) -> Result<FurthestPoint> {
    if candidates.is_empty() || vertices.is_empty() {
        return Err(Error::InvalidInput("furthest point needs candidates and vertices".into()));
    }
    let mut best: Option<FurthestPoint> = None;
    for (index, c) in candidates.iter().enumerate() {
        let mut distance = min_norm_point(c, vertices).distance;
        let scale = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if distance <= ZERO_DISTANCE * scale {
            distance = 0.0;
        }
        if best.as_ref().is_none_or(|b| distance > b.distance) {
            best = Some(FurthestPoint { index, point: c.clone(), distance });
        }
    }
    Ok(best.expect("non-empty candidates"))
}
