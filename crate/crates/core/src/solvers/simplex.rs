//! Dense two-phase primal simplex.
//!
//! The program is rewritten into standard form `max c'x, Ax = b, x >= 0`
//! (bound shifts, sign flips for upper-bounded variables, splits for free
//! variables, one slack per inequality). Phase one minimizes the sum of
//! artificials, phase two optimizes the real objective. Pricing is Dantzig's
//! largest reduced cost; after a run of degenerate pivots the solver switches
//! to Bland's rule until it makes progress again, which rules out cycling.

use crate::error::{Error, Result};

/// Feasibility tolerance for reported optimal points.
pub const TOL_FEAS: f64 = 1e-8;
/// Objective tolerance against the true optimum on well-conditioned inputs.
pub const TOL_OBJ: f64 = 1e-7;

const TOL_PIVOT: f64 = 1e-9;
const TOL_REDUCED_COST: f64 = 1e-10;
const DEGENERATE_STREAK_LIMIT: usize = 25;

/// `maximize objective·x` subject to `ineq_lhs x <= ineq_rhs`,
/// `eq_lhs x = eq_rhs` and per-variable bounds (`None` = unbounded).
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub ineq_lhs: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_lhs: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    /// A program over `n_vars` nonnegative variables with zero objective.
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            ineq_lhs: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_lhs: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![Some(0.0); n_vars],
            upper: vec![None; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn maximize(mut self, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), self.n_vars(), "objective length");
        self.objective = objective;
        self
    }

    pub fn leq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ineq_lhs.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    pub fn geq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ineq_lhs.push(row.into_iter().map(|v| -v).collect());
        self.ineq_rhs.push(-rhs);
        self
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_lhs.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    /// Makes every variable free.
    pub fn free_all(&mut self) -> &mut Self {
        self.lower.iter_mut().for_each(|l| *l = None);
        self.upper.iter_mut().for_each(|u| *u = None);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let bad = |msg: &str| Err(Error::InvalidInput(format!("linear program: {msg}")));
        if self.ineq_lhs.len() != self.ineq_rhs.len() || self.eq_lhs.len() != self.eq_rhs.len() {
            return bad("row counts do not match right-hand sides");
        }
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bound vectors have the wrong length");
        }
        let rows = self.ineq_lhs.iter().chain(&self.eq_lhs);
        for row in rows {
            if row.len() != n {
                return bad("constraint row has the wrong length");
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad("non-finite constraint coefficient");
            }
        }
        let scalars = self
            .objective
            .iter()
            .chain(&self.ineq_rhs)
            .chain(&self.eq_rhs)
            .chain(self.lower.iter().flatten())
            .chain(self.upper.iter().flatten());
        for v in scalars {
            if !v.is_finite() {
                return bad("non-finite objective, rhs or bound");
            }
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, rhs) in self.ineq_lhs.iter().zip(&self.ineq_rhs) {
            worst = worst.max(dot(row, x) - rhs);
        }
        for (row, rhs) in self.eq_lhs.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - rhs).abs());
        }
        for (j, &xj) in x.iter().enumerate() {
            if let Some(l) = self.lower[j] {
                worst = worst.max(l - xj);
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(xj - u);
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub point: Option<Vec<f64>>,
    /// Optimal value; `NaN` when infeasible, `+inf` when unbounded.
    pub objective_value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Returns the optimal point or an error naming the failed status.
    pub fn into_point(self, what: &str) -> Result<Vec<f64>> {
        match self.status {
            LpStatus::Optimal => Ok(self.point.expect("optimal solution carries a point")),
            LpStatus::Infeasible => Err(Error::Infeasible(what.to_string())),
            LpStatus::Unbounded => Err(Error::Unbounded(what.to_string())),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable is expressed with nonnegative standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = offset + col
    Shift { col: usize, offset: f64 },
    /// x = offset - col
    Flip { col: usize, offset: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    map: Vec<VarMap>,
    n_struct: usize,
    /// (coefficients over structural columns, rhs, has_slack)
    rows: Vec<(Vec<f64>, f64, bool)>,
    cost: Vec<f64>,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let mut map = Vec::with_capacity(lp.n_vars());
    let mut n_struct = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..lp.n_vars() {
        match (lp.lower[j], lp.upper[j]) {
            (Some(l), u) => {
                map.push(VarMap::Shift { col: n_struct, offset: l });
                if let Some(u) = u {
                    bound_rows.push((n_struct, u - l));
                }
                n_struct += 1;
            }
            (None, Some(u)) => {
                map.push(VarMap::Flip { col: n_struct, offset: u });
                n_struct += 1;
            }
            (None, None) => {
                map.push(VarMap::Split { pos: n_struct, neg: n_struct + 1 });
                n_struct += 2;
            }
        }
    }

    let transform = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut rhs = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match map[j] {
                VarMap::Shift { col, offset } => {
                    out[col] += a;
                    rhs -= a * offset;
                }
                VarMap::Flip { col, offset } => {
                    out[col] -= a;
                    rhs -= a * offset;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, rhs)
    };

    let mut rows = Vec::new();
    for (row, &rhs) in lp.ineq_lhs.iter().zip(&lp.ineq_rhs) {
        let (r, b) = transform(row, rhs);
        rows.push((r, b, true));
    }
    for (col, width) in bound_rows {
        let mut r = vec![0.0; n_struct];
        r[col] = 1.0;
        rows.push((r, width, true));
    }
    for (row, &rhs) in lp.eq_lhs.iter().zip(&lp.eq_rhs) {
        let (r, b) = transform(row, rhs);
        rows.push((r, b, false));
    }

    let (cost, _) = transform(&lp.objective, 0.0);
    StandardForm { map, n_struct, rows, cost }
}

struct Tableau {
    n_rows: usize,
    /// Columns excluding the rhs.
    n_cols: usize,
    /// Row-major, `n_cols + 1` entries per row; the last is the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    cap: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n_cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width() + self.n_cols]
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [f64]) {
        let w = self.width();
        let p = self.data[r * w + c];
        for k in 0..w {
            self.data[r * w + k] /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, &pr) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = reduced[c];
        if f != 0.0 {
            for (x, &pr) in reduced.iter_mut().zip(pivot_row.iter()) {
                *x -= f * pr;
            }
            reduced[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Maximizes with the given reduced-cost row (length `n_cols + 1`, the last
    /// entry tracking minus the objective value). Columns at or beyond
    /// `col_limit` never enter.
    fn optimize(&mut self, reduced: &mut [f64], col_limit: usize) -> Result<Outcome> {
        let mut bland = false;
        let mut streak = 0usize;
        loop {
            if self.iterations >= self.cap {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded its iteration cap of {}",
                    self.cap
                )));
            }
            let entering = if bland {
                (0..col_limit).find(|&j| reduced[j] > TOL_REDUCED_COST)
            } else {
                let mut best = None;
                let mut best_val = TOL_REDUCED_COST;
                for (j, &d) in reduced.iter().enumerate().take(col_limit) {
                    if d > best_val {
                        best_val = d;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(Outcome::Optimal);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.n_rows {
                let a = self.at(r, c);
                if a <= TOL_PIVOT {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if tie {
                            if bland {
                                self.basis[r] < self.basis[l]
                            } else {
                                a > self.at(l, c)
                            }
                        } else {
                            ratio < best_ratio
                        }
                    }
                };
                if better {
                    leave = Some(r);
                    best_ratio = ratio;
                }
            }
            let Some(r) = leave else {
                return Ok(Outcome::Unbounded);
            };

            if best_ratio <= 1e-12 {
                streak += 1;
                if streak >= DEGENERATE_STREAK_LIMIT {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(r, c, reduced);
            self.iterations += 1;
        }
    }
}

/// Solves `lp`. Errors only on malformed input or when pivoting exceeds the
/// iteration cap of `50 * (m + p + d)`.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let sf = standardize(lp);
    let m = sf.rows.len();
    let n_slack = sf.rows.iter().filter(|r| r.2).count();

    // Columns: structural | slacks | artificials.
    let slack_start = sf.n_struct;
    let art_start = slack_start + n_slack;
    let mut needs_art = vec![false; m];
    let mut slack_of_row = vec![usize::MAX; m];
    {
        let mut s = slack_start;
        for (i, row) in sf.rows.iter().enumerate() {
            if row.2 {
                slack_of_row[i] = s;
                s += 1;
            }
            needs_art[i] = !row.2 || row.1 < 0.0;
        }
    }
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let n_cols = art_start + n_art;
    let width = n_cols + 1;

    let mut data = vec![0.0; m * width];
    let mut basis = vec![0usize; m];
    let mut art = art_start;
    for (i, (coef, rhs, has_slack)) in sf.rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        let row = &mut data[i * width..(i + 1) * width];
        for (x, &a) in row.iter_mut().zip(coef) {
            *x = sign * a;
        }
        if *has_slack {
            row[slack_of_row[i]] = sign;
        }
        row[n_cols] = sign * rhs;
        if needs_art[i] {
            row[art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = slack_of_row[i];
        }
    }

    let cap = 50 * (lp.ineq_lhs.len() + lp.eq_lhs.len() + lp.n_vars()).max(1);
    let mut tab = Tableau { n_rows: m, n_cols, data, basis, iterations: 0, cap };

    // Phase one: maximize -sum(artificials).
    if n_art > 0 {
        let mut reduced = vec![0.0; width];
        for i in 0..m {
            if needs_art[i] {
                let row = &tab.data[i * width..(i + 1) * width];
                for (j, &a) in row.iter().enumerate() {
                    if j < art_start || j == n_cols {
                        reduced[j] += a;
                    }
                }
            }
        }
        tab.optimize(&mut reduced, art_start)?;
        let infeasibility = reduced[n_cols];
        let scale = 1.0 + sf.rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution { status: LpStatus::Infeasible, point: None, objective_value: f64::NAN });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| tab.at(r, j).abs() > TOL_PIVOT)
                    .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
                if let Some(c) = col {
                    let mut dummy = vec![0.0; width];
                    tab.pivot(r, c, &mut dummy);
                }
            }
        }
    }

    // Phase two.
    let mut reduced = vec![0.0; width];
    reduced[..sf.n_struct].copy_from_slice(&sf.cost);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < sf.n_struct { sf.cost[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                reduced[j] -= cb * tab.data[r * width + j];
            }
        }
    }
    if let Outcome::Unbounded = tab.optimize(&mut reduced, art_start)? {
        return Ok(LpSolution { status: LpStatus::Unbounded, point: None, objective_value: f64::INFINITY });
    }

    let mut xs = vec![0.0; sf.n_struct];
    for r in 0..m {
        let b = tab.basis[r];
        if b < sf.n_struct {
            xs[b] = tab.rhs(r).max(0.0);
        }
    }
    let x: Vec<f64> = sf
        .map
        .iter()
        .map(|vm| match *vm {
            VarMap::Shift { col, offset } => offset + xs[col],
            VarMap::Flip { col, offset } => offset - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();

    let violation = lp.max_violation(&x);
    let scale = 1.0
        + lp.ineq_rhs
            .iter()
            .chain(&lp.eq_rhs)
            .map(|v| v.abs())
            .fold(0.0, f64::max);
    if violation > 1e-6 * scale {
        return Err(Error::NumericalFailure(format!(
            "simplex returned a point violating constraints by {violation:e}"
        )));
    }
    let objective_value = dot(&lp.objective, &x);
    Ok(LpSolution { status: LpStatus::Optimal, point: Some(x), objective_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_active_bound() {
        let mut lp = LinearProgram::new(1).maximize(vec![1.0]);
        lp.leq(vec![1.0], 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.point.unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1).maximize(vec![1.0]);
        lp.leq(vec![1.0], 1.0).geq(vec![1.0], 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(2).maximize(vec![1.0, 1.0]);
        lp.leq(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // max -x - y  s.t. x + y = -3, x <= -1, y free, y >= -5
        let mut lp = LinearProgram::new(2).maximize(vec![-1.0, -1.0]);
        lp.eq(vec![1.0, 1.0], -3.0)
            .set_bounds(0, None, Some(-1.0))
            .set_bounds(1, Some(-5.0), None);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 3.0).abs() < 1e-9);
        let x = sol.point.unwrap();
        assert!(lp.max_violation(&x) < 1e-9);
    }

    #[test]
    fn boxed_variables() {
        let mut lp = LinearProgram::new(2).maximize(vec![2.0, -1.0]);
        lp.set_bounds(0, Some(-1.0), Some(4.0)).set_bounds(1, Some(-2.0), Some(2.0));
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 10.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2).maximize(vec![1.0, 0.0]);
        lp.eq(vec![1.0, 1.0], 1.0).eq(vec![2.0, 2.0], 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_rows_rejected() {
        let mut lp = LinearProgram::new(2);
        lp.leq(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidInput(_))));
        let mut lp = LinearProgram::new(1);
        lp.leq(vec![f64::NAN], 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn degenerate_klee_minty_like_instance() {
        // Beale's classic cycling example for the textbook rule.
        let mut lp = LinearProgram::new(4).maximize(vec![0.75, -150.0, 0.02, -6.0]);
        lp.leq(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .leq(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .leq(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 0.05).abs() < 1e-9);
    }
}
