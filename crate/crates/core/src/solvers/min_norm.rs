//! Wolfe's minimum-norm-point algorithm over the convex hull of a finite
//! generator set.

use nalgebra::{DMatrix, DVector};

/// Projection of a target onto `conv(generators)`.
#[derive(Clone, Debug)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Convex weights over the generators (nonnegative, summing to one).
    pub weights: Vec<f64>,
}

const MAX_MAJOR: usize = 10_000;

/// Closest point of `conv(generators)` to `target` in Euclidean norm.
///
/// # Panics
/// If `generators` is empty or dimensions disagree.
pub fn min_norm_point(target: &[f64], generators: &[Vec<f64>]) -> MinNormPoint {
    assert!(!generators.is_empty(), "min_norm_point needs at least one generator");
    let dim = target.len();
    assert!(generators.iter().all(|g| g.len() == dim), "generator dimension mismatch");

    // Work with shifted points so the problem is min ||x|| over conv(p_j).
    let pts: Vec<Vec<f64>> = generators
        .iter()
        .map(|g| g.iter().zip(target).map(|(a, b)| a - b).collect())
        .collect();
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let max_norm2 = pts.iter().map(|p| norm2(p)).fold(0.0, f64::max);
    let tol = 1e-12 * max_norm2.max(1e-300);

    let start = (0..pts.len())
        .min_by(|&a, &b| norm2(&pts[a]).total_cmp(&norm2(&pts[b])))
        .unwrap();
    // Active set and its convex weights.
    let mut active: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = pts[start].clone();

    let combine = |active: &[usize], w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &wi) in active.iter().zip(w) {
            for (o, p) in out.iter_mut().zip(&pts[i]) {
                *o += wi * p;
            }
        }
        out
    };

    for _ in 0..MAX_MAJOR {
        let xx = norm2(&x);
        if xx <= tol {
            break;
        }
        // Major cycle: most improving generator.
        let (j, xp) = (0..pts.len())
            .map(|j| (j, dot(&x, &pts[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xp <= 1e-12 * max_norm2 || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);

        // Minor cycles.
        loop {
            let alpha = affine_minimizer(&active, &pts);
            if alpha.iter().all(|&a| a > 1e-14) {
                lambda = alpha;
                x = combine(&active, &lambda);
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            // Drop generators whose weight vanished.
            let mut k = 0;
            while k < active.len() {
                if lambda[k] <= 1e-14 {
                    active.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            x = combine(&active, &lambda);
            if active.len() <= 1 {
                break;
            }
        }
    }

    let mut weights = vec![0.0; pts.len()];
    for (&i, &w) in active.iter().zip(&lambda) {
        weights[i] += w;
    }
    let point: Vec<f64> = x.iter().zip(target).map(|(a, b)| a + b).collect();
    MinNormPoint { distance: norm2(&x).sqrt(), point, weights }
}

/// Weights of the min-norm point of the affine hull of the active generators.
fn affine_minimizer(active: &[usize], pts: &[Vec<f64>]) -> Vec<f64> {
    let n = active.len();
    let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
    for a in 0..n {
        for b in 0..n {
            kkt[(a, b)] = pts[active[a]].iter().zip(&pts[active[b]]).map(|(x, y)| x * y).sum();
        }
        kkt[(a, n)] = 1.0;
        kkt[(n, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            kkt.pseudo_inverse(1e-14)
                .map(|p| p * &rhs)
                .unwrap_or_else(|_| DVector::from_element(n + 1, 1.0 / n as f64))
        });
    let w: Vec<f64> = sol.iter().take(n).copied().collect();
    let total: f64 = w.iter().sum();
    if total.abs() > 1e-300 {
        w.iter().map(|v| v / total).collect()
    } else {
        w
    }
}
