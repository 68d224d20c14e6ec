//! Pareto fronts by repeated pairwise scans.

/// Minimization dominance written out directly.
pub fn beats(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Peels off the non-dominated members of what remains, one front at a
/// time. Indices within each front are ascending.
pub fn fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| beats(&points[j], &points[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        out.push(front);
    }
    out
}

/// Distinct non-dominated points, in first-seen order.
pub fn pareto_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !points.iter().any(|q| beats(q, p)) && !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}

/// Checks the printed shape of a two-column ratio table: each column shows
/// `1.000` exactly once at three decimals, and both columns are
/// non-increasing down the rows.
pub fn ratio_table_shape(productivity: &[f64], vulnerability: &[f64]) -> Result<(), String> {
    for (name, col) in [("productivity", productivity), ("vulnerability", vulnerability)] {
        let ones = col.iter().filter(|r| format!("{r:.3}") == "1.000").count();
        if ones != 1 {
            return Err(format!("{name} column shows 1.000 {ones} times: {col:?}"));
        }
        if col.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("{name} column is not monotone: {col:?}"));
        }
    }
    Ok(())
}
