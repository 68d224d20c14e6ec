//! Witness linear program shared by gamma-set pruning and the exact residual check.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Result of [`envelope_gap`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    /// Optimal objective reported by the solver.
    pub objective: f64,
    /// Margin recomputed exactly at the witness belief.
    pub at_witness: f64,
    pub witness: Vec<f64>,
}

impl Gap {
    /// Conservative upper estimate of the true margin.
    pub fn upper(&self) -> f64 {
        self.objective.max(self.at_witness)
    }
}

/// Largest margin by which `v` undercuts the lower envelope of `others`.
///
/// Solves `max δ` over beliefs `y` on the simplex subject to
/// `v·y + δ ≤ κ·y` for every `κ` in `others`. With no `others` the margin is
/// `+∞` and the witness is the first vertex. `index` only labels solver
/// failures.
pub fn envelope_gap(v: &[f64], others: &[&[f64]], index: usize) -> Result<Gap> {
    let n = v.len();
    if others.is_empty() {
        let mut witness = vec![0.0; n];
        witness[0] = 1.0;
        return Ok(Gap {
            objective: f64::INFINITY,
            at_witness: f64::INFINITY,
            witness,
        });
    }
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let y: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    // |δ| can never exceed twice the largest entry; the box keeps the solver
    // from reporting a spurious unbounded ray on near-degenerate rows.
    let scale = others
        .iter()
        .flat_map(|k| k.iter())
        .chain(v)
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let delta = problem.add_var(1.0, (-4.0 * scale, 4.0 * scale));
    let ones: Vec<_> = y.iter().map(|&var| (var, 1.0)).collect();
    problem.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    for k in others {
        let mut row: Vec<_> = y
            .iter()
            .zip(v.iter().zip(k.iter()))
            .filter_map(|(&var, (a, b))| {
                let c = a - b;
                (c != 0.0).then_some((var, c))
            })
            .collect();
        row.push((delta, 1.0));
        problem.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
    }
    let lp_err = |message: String| Error::Lp { index, message };
    let solution = problem
        .solve()
        .map_err(|e| lp_err(e.to_string()))?
        .into_solution()
        .map_err(|_| lp_err("solve interrupted".into()))?;
    let mut witness: Vec<f64> = y.iter().map(|&var| solution.var_value(var).max(0.0)).collect();
    let total: f64 = witness.iter().sum();
    if total <= 0.0 {
        return Err(lp_err("degenerate witness".into()));
    }
    witness.iter_mut().for_each(|p| *p /= total);
    let at_witness = others
        .iter()
        .map(|k| k.iter().zip(v).zip(&witness).map(|((a, b), p)| (a - b) * p).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(Gap {
        objective: solution.objective(),
        at_witness,
        witness,
    })
}
