use crate::error::Result;
use crate::lp::envelope_gap;

use super::GammaVector;

/// Vectors closer than this in every component are merged.
pub const DEDUP_TOL: f64 = 1e-12;

/// A vector is kept only if it undercuts the kept set by more than this
/// somewhere on the simplex.
pub const WITNESS_TOL: f64 = 1e-10;

fn merge_tags(into: &mut GammaVector, from: &GammaVector) {
    for a in from.actions() {
        if a != into.action && !into.tied_actions.contains(&a) {
            into.tied_actions.push(a);
        }
    }
    into.tied_actions.sort_unstable();
}

fn near(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DEDUP_TOL)
}

fn dominated_by(v: &[f64], u: &[f64], tol: f64) -> bool {
    u.iter().zip(v).all(|(a, b)| *a <= b + tol)
}

/// Index of the vector minimizing `y·v`, ties broken by canonical order.
fn best_at(candidates: &[GammaVector], y: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = candidates[0].dot(y);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let val = c.dot(y);
        if val < best_val || (val == best_val && c.canonical_cmp(&candidates[best]).is_lt()) {
            best = i;
            best_val = val;
        }
    }
    best
}

/// Smallest subset with the same lower envelope over the belief simplex.
///
/// Duplicates are merged (their action tags are pooled), pointwise-dominated
/// vectors dropped, and the rest filtered by the witness LP: starting from the
/// best vector at each simplex vertex, a candidate that beats the kept set at
/// some belief brings in the best candidate at that belief, while a candidate
/// that never does is discarded. The output is in canonical order.
pub fn purge(vectors: Vec<GammaVector>) -> Result<Vec<GammaVector>> {
    purge_with(vectors, WITNESS_TOL)
}

/// [`purge`] with a custom tolerance: a vector is dropped when it improves
/// the envelope of the others by at most `tol` anywhere, so the envelope
/// moves by at most `tol`.
pub fn purge_with(mut vectors: Vec<GammaVector>, tol: f64) -> Result<Vec<GammaVector>> {
    vectors.sort_by(GammaVector::canonical_cmp);

    let mut unique: Vec<GammaVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        match unique.iter_mut().find(|u| near(&u.values, &v.values)) {
            Some(u) => merge_tags(u, &v),
            None => unique.push(v),
        }
    }

    let mut keep = vec![true; unique.len()];
    for i in 0..unique.len() {
        for j in 0..unique.len() {
            if i != j && keep[j] && dominated_by(&unique[i].values, &unique[j].values, tol) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut frontier: Vec<GammaVector> = unique
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect();
    if frontier.len() <= 1 {
        return Ok(frontier);
    }

    let dim = frontier[0].values.len();
    let mut kept: Vec<GammaVector> = Vec::new();
    let mut vertex = vec![0.0; dim];
    for i in 0..dim {
        if frontier.is_empty() {
            break;
        }
        vertex[i] = 1.0;
        let b = best_at(&frontier, &vertex);
        vertex[i] = 0.0;
        if !kept.iter().any(|k| k.values[i] <= frontier[b].values[i]) {
            kept.push(frontier.remove(b));
        }
    }

    let mut index = 0;
    while !frontier.is_empty() {
        let others: Vec<&[f64]> = kept.iter().map(|k| k.values.as_slice()).collect();
        let gap = envelope_gap(&frontier[0].values, &others, index)?;
        index += 1;
        if gap.at_witness > tol {
            let b = best_at(&frontier, &gap.witness);
            kept.push(frontier.remove(b));
        } else {
            frontier.remove(0);
        }
    }
    kept.sort_by(GammaVector::canonical_cmp);
    Ok(kept)
}
