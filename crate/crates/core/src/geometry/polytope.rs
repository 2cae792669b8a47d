use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::cmdp::io::{fmt_num, fmt_row, Lines};
use crate::error::{Error, Result};
use crate::solvers::{dot, solve_lp, svd, LinearProgram, LpStatus, RANK_TOL};

/// Axis-aligned box `{x : lower <= x <= upper}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput("box bounds differ in dimension".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("box bounds must be finite".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidInput("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Zero-width box at `p`.
    pub fn point(p: &[f64]) -> Self {
        Self { lower: p.to_vec(), upper: p.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }
}

/// Polytope `{x : A x <= b}` with an optional vertex list.
///
/// Polytopes built from points carry their vertices; polytopes obtained by
/// intersection or parsing may not.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub(crate) dim: usize,
    pub(crate) a: Vec<Vec<f64>>,
    pub(crate) b: Vec<f64>,
    pub(crate) vertices: Option<Vec<Vec<f64>>>,
    pub(crate) effective_dim: usize,
    pub(crate) empty: bool,
}

impl Polytope {
    /// Builds a polytope from halfspaces, detecting emptiness and the affine
    /// dimension with linear programs.
    pub fn from_halfspaces(dim: usize, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        check_rows(dim, &a, &b)?;
        let mut p = Self { dim, a, b, vertices: None, effective_dim: dim, empty: false };
        p.empty = !p.feasible()?;
        p.effective_dim = if p.empty { 0 } else { p.affine_dim()? };
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rows of `A`.
    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `A` as a dense matrix (m×d).
    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.a.len(), self.dim, |i, j| self.a[i][j])
    }

    pub fn n_halfspaces(&self) -> usize {
        self.a.len()
    }

    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    pub fn effective_dim(&self) -> usize {
        self.effective_dim
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// `A x <= b + tol` componentwise; always false for an empty polytope.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        !self.empty && x.len() == self.dim && self.a.iter().zip(&self.b).all(|(row, &bi)| dot(row, x) <= bi + tol)
    }

    /// Largest `a_i·x - b_i` over the rows (negative inside).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(&self.b).map(|(row, &bi)| dot(row, x) - bi).fold(f64::NEG_INFINITY, f64::max)
    }

    fn lp_over(&self, skip: Option<usize>, keep: &[bool]) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim);
        lp.free_all();
        for (i, (row, &bi)) in self.a.iter().zip(&self.b).enumerate() {
            if Some(i) != skip && keep[i] {
                lp.leq(row.clone(), bi);
            }
        }
        lp
    }

    fn feasible(&self) -> Result<bool> {
        if self.a.is_empty() {
            return Ok(true);
        }
        let lp = self.lp_over(None, &vec![true; self.a.len()]).maximize(vec![0.0; self.dim]);
        Ok(solve_lp(&lp)?.status != LpStatus::Infeasible)
    }

    /// Dimension of the affine hull: `d` minus the rank of the rows along
    /// which the polytope has (near) zero width.
    fn affine_dim(&self) -> Result<usize> {
        let keep = vec![true; self.a.len()];
        let mut flat = Vec::new();
        for (i, row) in self.a.iter().enumerate() {
            let lp = self.lp_over(None, &keep).maximize(row.iter().map(|v| -v).collect());
            let sol = solve_lp(&lp)?;
            if sol.status == LpStatus::Optimal {
                let width = self.b[i] + sol.objective_value;
                let norm = dot(row, row).sqrt();
                if width <= 1e-6 * norm.max(1.0) {
                    flat.push(row.clone());
                }
            }
        }
        if flat.is_empty() {
            return Ok(self.dim);
        }
        let m = DMatrix::from_fn(flat.len(), self.dim, |i, j| flat[i][j]);
        Ok(self.dim - svd(&m)?.rank(RANK_TOL))
    }

    /// Removes rows implied by the others.
    pub(crate) fn prune_redundant(&mut self) -> Result<()> {
        let m = self.a.len();
        let mut keep = vec![true; m];
        for i in 0..m {
            let lp = self.lp_over(Some(i), &keep).maximize(self.a[i].clone());
            let sol = solve_lp(&lp)?;
            if sol.status == LpStatus::Optimal {
                let scale = 1.0 + self.b[i].abs();
                if sol.objective_value <= self.b[i] + 1e-9 * scale {
                    keep[i] = false;
                }
            }
        }
        let mut k = keep.iter();
        self.a.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.b.retain(|_| *k.next().unwrap());
        Ok(())
    }
}

fn check_rows(dim: usize, a: &[Vec<f64>], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("A and b have different row counts".into()));
    }
    if a.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidInput("halfspace row has the wrong dimension".into()));
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("halfspaces must be finite".into()));
    }
    Ok(())
}

/// `p1 ∩ p2` with redundant rows pruned. An empty intersection is returned as
/// a polytope flagged empty, not as an error.
pub fn intersect(p1: &Polytope, p2: &Polytope) -> Result<Polytope> {
    if p1.dim != p2.dim {
        return Err(Error::InvalidInput("intersecting polytopes of different dimension".into()));
    }
    let a: Vec<Vec<f64>> = p1.a.iter().chain(&p2.a).cloned().collect();
    let b: Vec<f64> = p1.b.iter().chain(&p2.b).copied().collect();
    let mut out = Polytope { dim: p1.dim, a, b, vertices: None, effective_dim: p1.dim, empty: p1.empty || p2.empty };
    if !out.empty {
        out.empty = !out.feasible()?;
    }
    if out.empty {
        out.effective_dim = 0;
        return Ok(out);
    }
    out.prune_redundant()?;
    out.effective_dim = out.affine_dim()?;
    Ok(out)
}

/// Plain-text export: a halfspace block with one `a_1 ... a_d | b` row per
/// facet, followed by an optional vertex block.
pub fn write_polytope(p: &Polytope) -> String {
    let mut out = String::from("polytope\n");
    let _ = writeln!(out, "dim {}", p.dim);
    let _ = writeln!(out, "effective_dim {}", p.effective_dim);
    let _ = writeln!(out, "empty {}", p.empty);
    let _ = writeln!(out, "halfspaces {}", p.a.len());
    for (row, bi) in p.a.iter().zip(&p.b) {
        let _ = writeln!(out, "{} | {}", fmt_row(row), fmt_num(*bi));
    }
    if let Some(vs) = &p.vertices {
        let _ = writeln!(out, "vertices {}", vs.len());
        for v in vs {
            let _ = writeln!(out, "{}", fmt_row(v));
        }
    }
    out.push_str("end\n");
    out
}

pub fn read_polytope(text: &str) -> Result<Polytope> {
    let mut lines = Lines::new(text);
    lines.keyword("polytope")?;
    let dim = {
        let v = lines.keyword("dim")?;
        lines.count(v)?
    };
    let effective_dim = {
        let v = lines.keyword("effective_dim")?;
        lines.count(v)?
    };
    let empty = match lines.keyword("empty")? {
        "true" => true,
        "false" => false,
        other => return Err(lines.err(format!("expected true or false, found `{other}`"))),
    };
    let m = {
        let v = lines.keyword("halfspaces")?;
        lines.count(v)?
    };
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        let l = lines.next_line()?;
        let (row, rhs) = l.split_once('|').ok_or_else(|| lines.err("halfspace row needs `|`"))?;
        a.push(lines.numbers(row, dim)?);
        b.push(lines.numbers(rhs, 1)?[0]);
    }
    let mut vertices = None;
    loop {
        let l = lines.next_line()?;
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some("end") => break,
            Some("vertices") => {
                let n = lines.count(parts.next().unwrap_or(""))?;
                let mut vs = Vec::with_capacity(n);
                for _ in 0..n {
                    let row = lines.next_line()?;
                    vs.push(lines.numbers(row, dim)?);
                }
                vertices = Some(vs);
            }
            _ => return Err(lines.err(format!("unexpected line `{l}`"))),
        }
    }
    check_rows(dim, &a, &b).map_err(|e| lines.err(e.to_string()))?;
    if effective_dim > dim {
        return Err(lines.err("effective_dim exceeds dim"));
    }
    Ok(Polytope { dim, a, b, vertices, effective_dim, empty })
}
