use super::{convex_hull, intersect, AxisBox, Polytope, DEFAULT_EPS};
use crate::error::{Error, Result};

/// Largest `k · 2^d` corner enumeration `guaranteed_hull` accepts.
pub const CORNER_BUDGET: u64 = 1 << 20;

/// The set of points inside `conv(x_1, ..., x_k)` for every choice of
/// `x_i` in box `i`.
///
/// A point escapes some hull exactly when a direction `θ` separates it from
/// the points that minimize `θ·x_i` within each box. Those minimizers are the
/// box corners picked by the sign pattern of `θ` (lower bound where
/// `θ_j > 0`, upper where `θ_j < 0`), the same pattern for every box. The
/// guaranteed hull is therefore the intersection of the `2^d` hulls of
/// same-pattern corners. Faster output-sensitive methods exist; full
/// enumeration keeps this one simple and exact.
pub fn guaranteed_hull(boxes: &[AxisBox]) -> Result<Polytope> {
    let first = boxes.first().ok_or_else(|| Error::InvalidInput("guaranteed hull of no boxes".into()))?;
    let d = first.dim();
    if d == 0 || boxes.iter().any(|b| b.dim() != d) {
        return Err(Error::InvalidInput("boxes must share a positive dimension".into()));
    }
    let k = boxes.len() as u64;
    let needed = if d >= 63 { u64::MAX } else { k.saturating_mul(1u64 << d) };
    if needed > CORNER_BUDGET {
        return Err(Error::BudgetExceeded { needed, budget: CORNER_BUDGET });
    }

    // Patterns that pick the same corners (zero-width coordinates) give the
    // same hull.
    let free: Vec<usize> = (0..d).filter(|&j| boxes.iter().any(|b| b.lower[j] < b.upper[j])).collect();
    let mut result: Option<Polytope> = None;
    for mask in 0u64..(1u64 << free.len()) {
        let corners: Vec<Vec<f64>> = boxes
            .iter()
            .map(|b| {
                let mut c = b.lower.clone();
                for (bit, &j) in free.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        c[j] = b.upper[j];
                    }
                }
                c
            })
            .collect();
        let hull = convex_hull(&corners, DEFAULT_EPS)?;
        let next = match result {
            None => hull,
            Some(acc) => intersect(&acc, &hull)?,
        };
        if next.is_empty() {
            return Ok(next);
        }
        result = Some(next);
    }
    Ok(result.expect("at least one pattern"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_boxes_give_the_plain_hull() {
        let pts = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let boxes: Vec<AxisBox> = pts.iter().map(|p| AxisBox::point(p)).collect();
        let g = guaranteed_hull(&boxes).unwrap();
        assert!(!g.is_empty());
        assert!(g.contains(&[0.2, 0.2], 1e-9));
        assert!(!g.contains(&[0.6, 0.6], 1e-9));
    }

    #[test]
    fn oversized_boxes_leave_nothing() {
        let boxes: Vec<AxisBox> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|c| AxisBox::new(vec![c[0] - 2.0, c[1] - 2.0], vec![c[0] + 2.0, c[1] + 2.0]).unwrap())
            .collect();
        assert!(guaranteed_hull(&boxes).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let boxes = vec![AxisBox::new(vec![0.0; 21], vec![1.0; 21]).unwrap()];
        assert!(matches!(guaranteed_hull(&boxes), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn small_boxes_shrink_the_hull() {
        let pts = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let boxes: Vec<AxisBox> =
            pts.iter().map(|c| AxisBox::new(vec![c[0] - 0.5, c[1] - 0.5], vec![c[0] + 0.5, c[1] + 0.5]).unwrap()).collect();
        let g = guaranteed_hull(&boxes).unwrap();
        assert!(g.contains(&[1.0, 1.0], 1e-9));
        // Inside the hull of the centers but not of the inner corners.
        assert!(!g.contains(&[0.1, 0.1], 1e-9));
        assert!(!g.contains(&[3.3, 0.3], 1e-9));
    }
}
