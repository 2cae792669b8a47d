//! Convex hulls of point sets as halfspace systems.
//!
//! One and two points use closed forms. Otherwise the points are centered and
//! projected onto their affine span (found by SVD), the hull is built there by
//! beneath-beyond insertion, and the facets are lifted back to `R^d`
//! together with slab constraints `|w·(x - c)| <= eps` for every direction `w`
//! orthogonal to the span.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::Polytope;
use crate::error::{Error, Result};
use crate::solvers::{complete_basis, dot, svd, RANK_TOL};

/// Default relaxation of the lifted equality constraints.
pub const DEFAULT_EPS: f64 = 1e-7;

pub fn convex_hull(points: &[Vec<f64>], eps: f64) -> Result<Polytope> {
    let first = points.first().ok_or_else(|| Error::InvalidInput("convex hull of no points".into()))?;
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidInput("points must have at least one coordinate".into()));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput("points differ in dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("points must be finite".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps {eps} must be finite and nonnegative")));
    }
    let distinct = |p: &Vec<f64>| p.iter().zip(first).any(|(a, b)| a != b);
    match points.len() {
        1 => Ok(single_point(first, eps)),
        2 if !distinct(&points[1]) => Ok(single_point(first, eps)),
        2 => Ok(segment(first, &points[1], eps)),
        _ => general(points, eps),
    }
}

/// `A = [I; -I]`, `b = [p + eps; -p + eps]`.
fn single_point(p: &[f64], eps: f64) -> Polytope {
    let d = p.len();
    let mut a = Vec::with_capacity(2 * d);
    let mut b = Vec::with_capacity(2 * d);
    for sign in [1.0, -1.0] {
        for (j, &pj) in p.iter().enumerate() {
            let mut row = vec![0.0; d];
            row[j] = sign;
            a.push(row);
            b.push(sign * pj + eps);
        }
    }
    Polytope { dim: d, a, b, vertices: Some(vec![p.to_vec()]), effective_dim: 0, empty: false }
}

/// `A = [W; -W; vᵀ; -vᵀ]` with `v = p2 - p1` (normalized) and the rows of
/// `W` an orthonormal basis of `v`'s complement.
fn segment(p1: &[f64], p2: &[f64], eps: f64) -> Polytope {
    let d = p1.len();
    let v: Vec<f64> = p2.iter().zip(p1).map(|(a, b)| a - b).collect();
    let norm = dot(&v, &v).sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let mut basis = vec![DVector::from_column_slice(&v)];
    complete_basis(&mut basis, d);
    let mut a = Vec::with_capacity(2 * d);
    let mut b = Vec::with_capacity(2 * d);
    for w in &basis[1..] {
        let w: Vec<f64> = w.iter().copied().collect();
        let (w1, w2) = (dot(&w, p1), dot(&w, p2));
        b.push(w1.max(w2) + eps);
        b.push(-w1.min(w2) + eps);
        a.push(w.clone());
        a.push(w.iter().map(|x| -x).collect());
    }
    a.push(v.clone());
    b.push(dot(&v, p2));
    a.push(v.iter().map(|x| -x).collect());
    b.push(-dot(&v, p1));
    Polytope { dim: d, a, b, vertices: Some(vec![p1.to_vec(), p2.to_vec()]), effective_dim: 1, empty: false }
}

fn general(points: &[Vec<f64>], eps: f64) -> Result<Polytope> {
    let k = points.len();
    let d = points[0].len();
    let centroid: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / k as f64).collect();
    let centered = DMatrix::from_fn(k, d, |i, j| points[i][j] - centroid[j]);
    let dec = svd(&centered)?;
    let r = dec.rank(RANK_TOL);
    if r == 0 {
        return Ok(single_point(&points[0], eps));
    }
    let span: Vec<Vec<f64>> = (0..r).map(|i| dec.v.row(i).iter().copied().collect()).collect();
    let orth: Vec<Vec<f64>> = (r..d).map(|i| dec.v.row(i).iter().copied().collect()).collect();
    let projected: Vec<Vec<f64>> = (0..k)
        .map(|i| span.iter().map(|w| dot(w, centered.row(i).transpose().as_slice())).collect())
        .collect();

    let (facets, vertex_ids) = if r == 1 {
        interval(&projected)
    } else {
        BeneathBeyond::run(&projected)?
    };

    let mut a = Vec::with_capacity(facets.len() + 2 * orth.len());
    let mut b = Vec::with_capacity(a.capacity());
    for normal in &facets {
        let row: Vec<f64> = (0..d).map(|j| normal.iter().zip(&span).map(|(n, w)| n * w[j]).sum()).collect();
        let rhs = points.iter().map(|p| dot(&row, p)).fold(f64::NEG_INFINITY, f64::max);
        a.push(row);
        b.push(rhs);
    }
    for w in &orth {
        let vals: Vec<f64> = points.iter().map(|p| dot(w, p)).collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        a.push(w.clone());
        b.push(hi + eps);
        a.push(w.iter().map(|x| -x).collect());
        b.push(-lo + eps);
    }
    let vertices = vertex_ids.into_iter().map(|i| points[i].clone()).collect();
    Ok(Polytope { dim: d, a, b, vertices: Some(vertices), effective_dim: r, empty: false })
}

fn interval(values: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let (mut lo, mut hi) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if v[0] < values[lo][0] {
            lo = i;
        }
        if v[0] > values[hi][0] {
            hi = i;
        }
    }
    (vec![vec![1.0], vec![-1.0]], vec![lo, hi])
}

struct Facet {
    vertices: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
}

/// Incremental hull of full-dimensional points in `R^r`, `r >= 2`. Facets are
/// simplices; coplanar neighbours are merged at the end.
struct BeneathBeyond<'a> {
    points: &'a [Vec<f64>],
    facets: Vec<Option<Facet>>,
    interior: Vec<f64>,
    tol: f64,
}

impl<'a> BeneathBeyond<'a> {
    fn run(points: &'a [Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let r = points[0].len();
        let scale = points.iter().map(|p| dot(p, p).sqrt()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let tol = 1e-10 * scale;
        let simplex = initial_simplex(points, tol)?;
        let interior: Vec<f64> =
            (0..r).map(|j| simplex.iter().map(|&i| points[i][j]).sum::<f64>() / (r + 1) as f64).collect();
        let mut hull = BeneathBeyond { points, facets: Vec::new(), interior, tol };
        for skip in 0..=r {
            let verts: Vec<usize> = simplex.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
            hull.add_facet(verts)?;
        }

        // Far points first: interior points are then discarded cheaply.
        let mut order: Vec<usize> = (0..points.len()).filter(|i| !simplex.contains(i)).collect();
        let dist = |i: usize| points[i].iter().zip(&hull.interior).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        order.sort_by(|&x, &y| dist(y).total_cmp(&dist(x)).then(x.cmp(&y)));
        for p in order {
            hull.insert(p)?;
        }
        hull.finish(scale)
    }

    fn add_facet(&mut self, vertices: Vec<usize>) -> Result<()> {
        let base = &self.points[vertices[0]];
        let r = base.len();
        let diffs = DMatrix::from_fn(vertices.len() - 1, r, |i, j| self.points[vertices[i + 1]][j] - base[j]);
        let dec = svd(&diffs)?;
        let mut normal: Vec<f64> = dec.v.row(r - 1).iter().copied().collect();
        let mut offset = dot(&normal, base);
        let side = dot(&normal, &self.interior) - offset;
        if side.abs() <= self.tol {
            return Err(Error::NumericalFailure("hull facet passes through the interior point".into()));
        }
        if side > 0.0 {
            normal.iter_mut().for_each(|v| *v = -*v);
            offset = -offset;
        }
        self.facets.push(Some(Facet { vertices, normal, offset }));
        Ok(())
    }

    fn insert(&mut self, p: usize) -> Result<()> {
        let x = &self.points[p];
        let visible: Vec<usize> = self
            .facets
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().filter(|f| dot(&f.normal, x) - f.offset > self.tol).map(|_| i))
            .collect();
        if visible.is_empty() {
            return Ok(());
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for &fi in &visible {
            let verts = &self.facets[fi].as_ref().expect("live facet").vertices;
            for skip in 0..verts.len() {
                let mut ridge: Vec<usize> = verts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                ridge.sort_unstable();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        for &fi in &visible {
            self.facets[fi] = None;
        }
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|&(_, c)| c == 1).map(|(r, _)| r).collect();
        horizon.sort();
        for mut ridge in horizon {
            ridge.push(p);
            self.add_facet(ridge)?;
        }
        Ok(())
    }

    /// Checks that every point lies inside every facet, that the boundary is
    /// closed, and merges coplanar facets.
    fn finish(self, scale: f64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let facets: Vec<Facet> = self.facets.into_iter().flatten().collect();
        let mut ridge_count: HashMap<Vec<usize>, usize> = HashMap::new();
        for f in &facets {
            for skip in 0..f.vertices.len() {
                let mut ridge: Vec<usize> = f.vertices.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                ridge.sort_unstable();
                *ridge_count.entry(ridge).or_insert(0) += 1;
            }
        }
        if ridge_count.values().any(|&c| c != 2) {
            return Err(Error::NumericalFailure("hull boundary is not a closed manifold".into()));
        }
        for f in &facets {
            let worst = self.points.iter().map(|x| dot(&f.normal, x) - f.offset).fold(f64::NEG_INFINITY, f64::max);
            if worst > 1e-7 * scale {
                return Err(Error::NumericalFailure(format!("input point lies {worst:e} outside a hull facet")));
            }
        }
        let mut normals: Vec<Vec<f64>> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        let mut vertex_ids: Vec<usize> = Vec::new();
        for f in &facets {
            vertex_ids.extend(&f.vertices);
            let dup = normals.iter().zip(&offsets).any(|(n, &o)| {
                n.iter().zip(&f.normal).all(|(a, b)| (a - b).abs() <= 1e-9) && (o - f.offset).abs() <= 1e-9 * scale
            });
            if !dup {
                normals.push(f.normal.clone());
                offsets.push(f.offset);
            }
        }
        vertex_ids.sort_unstable();
        vertex_ids.dedup();
        Ok((normals, vertex_ids))
    }
}

/// Greedily picks `r + 1` affinely independent points, each time the one
/// farthest from the affine span of those already chosen.
fn initial_simplex(points: &[Vec<f64>], tol: f64) -> Result<Vec<usize>> {
    let r = points[0].len();
    let mut chosen = vec![0usize];
    let start = &points[0];
    let far = (0..points.len())
        .max_by(|&i, &j| {
            let di: f64 = points[i].iter().zip(start).map(|(a, b)| (a - b).powi(2)).sum();
            let dj: f64 = points[j].iter().zip(start).map(|(a, b)| (a - b).powi(2)).sum();
            di.total_cmp(&dj).then(j.cmp(&i))
        })
        .expect("points");
    chosen[0] = far;
    let origin = points[far].clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() < r + 1 {
        let residual = |i: usize| {
            let mut v: Vec<f64> = points[i].iter().zip(&origin).map(|(a, b)| a - b).collect();
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            v
        };
        let (best, res) = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| {
                let v = residual(i);
                (i, v)
            })
            .fold(None::<(usize, Vec<f64>)>, |acc, (i, v)| match acc {
                Some((j, w)) if dot(&w, &w) >= dot(&v, &v) => Some((j, w)),
                _ => Some((i, v)),
            })
            .ok_or_else(|| Error::NumericalFailure("too few points for a full-dimensional hull".into()))?;
        let norm = dot(&res, &res).sqrt();
        if norm <= tol {
            return Err(Error::NumericalFailure("projected points are not full-dimensional".into()));
        }
        basis.push(res.iter().map(|v| v / norm).collect());
        chosen.push(best);
    }
    Ok(chosen)
}
