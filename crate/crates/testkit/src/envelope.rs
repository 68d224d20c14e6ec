//! Lower envelopes of vector sets, by brute force and small LPs.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

pub fn dot(a: &[f64], y: &[f64]) -> f64 {
    a.iter().zip(y).map(|(x, p)| x * p).sum()
}

/// `min_v v·y`, `+∞` for an empty set.
pub fn envelope(vectors: &[Vec<f64>], y: &[f64]) -> f64 {
    vectors.iter().map(|v| dot(v, y)).fold(f64::INFINITY, f64::min)
}

/// `max_y (min_i a_i·y − b·y)` over the simplex.
fn max_below(a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = b.len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let y: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    // The margin is bounded by the data; the box only guards the solver
    // against reporting a spurious unbounded ray.
    let scale = a.iter().flatten().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    let t = lp.add_var(1.0, (-4.0 * scale, 4.0 * scale));
    let sum: Vec<_> = y.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
    for ai in a {
        // t ≤ (a_i − b)·y
        let mut row: Vec<_> = y
            .iter()
            .enumerate()
            .filter(|&(k, _)| b[k] != ai[k])
            .map(|(k, &v)| (v, b[k] - ai[k]))
            .collect();
        row.push((t, 1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
    }
    match lp.solve().map(|o| o.into_solution()) {
        Ok(Ok(solution)) => solution.objective(),
        // Treat a solver failure as "not covered", which only keeps a vector.
        _ => f64::INFINITY,
    }
}

/// Exact `sup_y |min_i a_i·y − min_j b_j·y|` over the simplex.
pub fn sup_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let up = b.iter().map(|bj| max_below(a, bj)).fold(f64::NEG_INFINITY, f64::max);
    let down = a.iter().map(|ai| max_below(b, ai)).fold(f64::NEG_INFINITY, f64::max);
    up.max(down).max(0.0)
}

/// Removes vectors that never lie strictly below the envelope of the
/// others by more than `tol`.
///
/// A first sweep drops each candidate that the vectors kept before it
/// already cover; a second sweep re-tests every survivor against all the
/// other survivors.
pub fn reduce(mut candidates: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    if candidates.is_empty() {
        return candidates;
    }
    let n = candidates[0].len();
    let centre = vec![1.0 / n as f64; n];
    candidates.sort_by(|a, b| dot(a, &centre).total_cmp(&dot(b, &centre)));
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for v in candidates {
        if kept.iter().any(|u| u.iter().zip(&v).all(|(a, b)| *a <= b + tol)) {
            continue;
        }
        if kept.is_empty() || max_below(&kept, &v) > tol {
            kept.push(v);
        }
    }
    let mut i = 0;
    while i < kept.len() && kept.len() > 1 {
        let others: Vec<Vec<f64>> = kept
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.clone())
            .collect();
        if max_below(&others, &kept[i]) > tol {
            i += 1;
        } else {
            kept.remove(i);
        }
    }
    kept
}
