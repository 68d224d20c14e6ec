use crate::error::{Error, Result};

/// Pareto dominance under minimization: no worse in every criterion and
/// strictly better in at least one. Exact comparison, no tolerance.
pub fn dominates(f1: &[f64], f2: &[f64]) -> Result<bool> {
    if f1.len() != f2.len() {
        return Err(Error::LengthMismatch {
            expected: f1.len(),
            actual: f2.len(),
        });
    }
    let mut strict = false;
    for (a, b) in f1.iter().zip(f2) {
        if a > b {
            return Ok(false);
        }
        strict |= a < b;
    }
    Ok(strict)
}

fn dom(f1: &[f64], f2: &[f64]) -> bool {
    dominates(f1, f2).expect("fitness tuples share one length")
}

/// Partitions indices of `fitness` into fronts: the first front is the
/// non-dominated set, each later front is non-dominated once the earlier
/// fronts are removed. Indices within a front are ascending.
pub fn fast_nondominated_sort(fitness: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = fitness.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dom(&fitness[p], &fitness[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dom(&fitness[q], &fitness[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Diversity measure within one front.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CrowdingMethod {
    /// Sum over criteria of the normalized gap between sorted neighbours;
    /// the extremes of each criterion get `+∞`.
    #[default]
    Cuboid,
    /// Mean Euclidean distance to the other members; a lone member gets `+∞`.
    MeanEuclidean,
}

pub fn crowding_distance(front: &[Vec<f64>], method: CrowdingMethod) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    match method {
        CrowdingMethod::Cuboid => {
            let mut d = vec![0.0; n];
            if n <= 2 {
                return vec![f64::INFINITY; n];
            }
            for m in 0..front[0].len() {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]).then(a.cmp(&b)));
                let lo = front[order[0]][m];
                let hi = front[order[n - 1]][m];
                d[order[0]] = f64::INFINITY;
                d[order[n - 1]] = f64::INFINITY;
                let range = hi - lo;
                if range > 0.0 {
                    for k in 1..n - 1 {
                        d[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
                    }
                }
            }
            d
        }
        CrowdingMethod::MeanEuclidean => {
            if n == 1 {
                return vec![f64::INFINITY];
            }
            (0..n)
                .map(|i| {
                    let total: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| {
                            front[i]
                                .iter()
                                .zip(&front[j])
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum::<f64>()
                                .sqrt()
                        })
                        .sum();
                    total / (n - 1) as f64
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_cases() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn two_fronts() {
        let f = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(fast_nondominated_sort(&f), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn cuboid_line() {
        let f = vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(crowding_distance(&f, CrowdingMethod::Cuboid), vec![f64::INFINITY, 2.0, f64::INFINITY]);
    }

    #[test]
    fn mean_euclidean_pair_and_singleton() {
        let f = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(crowding_distance(&f, CrowdingMethod::MeanEuclidean), vec![5.0, 5.0]);
        assert_eq!(crowding_distance(&[vec![1.0]], CrowdingMethod::MeanEuclidean), vec![f64::INFINITY]);
        assert_eq!(crowding_distance(&[vec![1.0]], CrowdingMethod::Cuboid), vec![f64::INFINITY]);
    }
}
