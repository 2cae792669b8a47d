use crate::cmdp::FeatureExpectations;
use crate::error::{Error, Result};
use crate::solvers::{solve_lp, LinearProgram, LpStatus};

/// Smallest cone coefficient accepted as a strict `α_j > 0`.
pub const ALPHA_MIN: f64 = 1e-9;

/// Whether `x` lies in one of the cones
/// `U_i = { f_i + Σ_{j≠i} α_j (f_i - f_j) : α_j > 0 }`,
/// whose points cannot be feasible if every demonstration is optimal.
pub fn unsafe_set_membership(demos: &[FeatureExpectations], x: &[f64]) -> Result<bool> {
    if demos.len() < 2 {
        return Err(Error::InvalidInput("the unsafe set needs at least two demonstrations".into()));
    }
    let d = x.len();
    if demos.iter().any(|f| f.dim() != d) {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    for (i, fi) in demos.iter().enumerate() {
        let others: Vec<&FeatureExpectations> = demos.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f).collect();
        // Maximize t = min_j α_j (capped at 1); x is in U_i when t clears
        // ALPHA_MIN. Bounding α from below directly would sit inside the LP
        // feasibility tolerance.
        let n = others.len();
        let mut lp = LinearProgram::new(n + 1);
        lp.set_bounds(n, Some(0.0), Some(1.0));
        for j in 0..n {
            let mut row = vec![0.0; n + 1];
            row[n] = 1.0;
            row[j] = -1.0;
            lp.leq(row, 0.0);
        }
        for c in 0..d {
            let mut row: Vec<f64> = others.iter().map(|fj| fi.values[c] - fj.values[c]).collect();
            row.push(0.0);
            lp.eq(row, x[c] - fi.values[c]);
        }
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let sol = solve_lp(&lp.maximize(objective))?;
        if sol.status == LpStatus::Optimal && sol.objective_value > ALPHA_MIN {
            return Ok(true);
        }
    }
    Ok(false)
}
