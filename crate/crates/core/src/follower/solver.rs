use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::history::{Game, Step};
use crate::lp::envelope_gap;
use crate::model::Joint;
use crate::policy::FiniteMemoryPolicy;

use super::{purge_with, GammaSet, GammaVector, WITNESS_TOL};

/// How the cross-sum over successor choices is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackupMode {
    /// Purge after adding each `(s^F', z^F')` term.
    Incremental,
    /// Form every combination, then purge once. Refuses above `cap` candidates.
    Enumerate { cap: usize },
}

/// Where the stopping residual is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceCheck {
    /// Simplex vertices plus the uniform belief.
    Probes,
    /// Supremum over the whole simplex, by linear programming.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    pub mode: BackupMode,
    pub check: ConvergenceCheck,
    /// Envelope tolerance of the pruning inside each backup. `None` uses
    /// `ε(1−β)/4`: each pruned vector lifts the value by at most that much,
    /// so the error accumulated over the whole discounted run stays below
    /// `ε/4` and the stopping rule still certifies `ε` overall.
    pub prune_tol: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 1e-4,
            max_iter: 10_000,
            mode: BackupMode::Incremental,
            check: ConvergenceCheck::Probes,
            prune_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Residual after each iteration.
    pub residuals: Vec<f64>,
    /// `|Γ(s^F)|` after each iteration.
    pub gamma_counts: Vec<Vec<usize>>,
    pub epsilon: f64,
    /// Stopping threshold `ε(1−β)/(2β)`.
    pub threshold: f64,
    pub converged: bool,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }

    /// Turns a non-converged report into an error.
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                residual: self.final_residual(),
                target: self.threshold,
            })
        }
    }

    /// Run log: one row per iteration with the residual and set sizes.
    pub fn to_csv(&self, state_names: &[String]) -> String {
        let mut out = String::from("iteration,residual");
        for s in state_names {
            let _ = write!(out, ",count_{s}");
        }
        out.push('\n');
        for (i, (r, counts)) in self.residuals.iter().zip(&self.gamma_counts).enumerate() {
            let _ = write!(out, "{},{r:e}", i + 1);
            for c in counts {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Leader-window transition structure seen by the follower for one
/// `(s^F, a^F)`: expected immediate cost and, per `(s^F', z^F')`, the sparse
/// weights `Σ_{a^L} π^L(a^L|w^L) P(z', s' | s, a)` onto successor windows.
struct ActionModel {
    cost: Vec<f64>,
    terms: Vec<((usize, usize), Vec<Vec<(usize, f64)>>)>,
}

fn action_model(game: &Game, policy: &FiniteMemoryPolicy, sf: usize, af: usize) -> ActionModel {
    let model = game.model();
    let space = game.leader();
    let n = space.len();
    let mut cost = vec![0.0; n];
    let mut terms: BTreeMap<(usize, usize), Vec<BTreeMap<usize, f64>>> = BTreeMap::new();
    for wl in 0..n {
        let s = Joint::new(space.window(wl).current_state(), sf);
        for (al, &pa) in policy.row(wl).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let a = Joint::new(al, af);
            cost[wl] += pa * model.follower_cost(s, a);
            for o in model.outcomes(s, a) {
                let next = space
                    .successor(wl, Step::new(o.observation.leader, o.next.leader, al))
                    .expect("leader window space is closed under the dynamics");
                let rows = terms
                    .entry((o.next.follower, o.observation.follower))
                    .or_insert_with(|| vec![BTreeMap::new(); n]);
                *rows[wl].entry(next).or_insert(0.0) += pa * o.p;
            }
        }
    }
    ActionModel {
        cost,
        terms: terms
            .into_iter()
            .map(|(k, rows)| (k, rows.into_iter().map(|r| r.into_iter().collect()).collect()))
            .collect(),
    }
}

fn project(rows: &[Vec<(usize, f64)>], beta: f64, gamma: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|r| beta * r.iter().map(|&(j, w)| w * gamma[j]).sum::<f64>())
        .collect()
}

fn cross_sum(acc: &[GammaVector], add: &[GammaVector]) -> Vec<GammaVector> {
    let mut out = Vec::with_capacity(acc.len() * add.len());
    for a in acc {
        for b in add {
            let mut v = a.clone();
            v.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x += y);
            v.provenance.extend(b.provenance.iter().map(|(k, i)| (*k, *i)));
            out.push(v);
        }
    }
    out
}

fn backup_action(
    game: &Game,
    policy: &FiniteMemoryPolicy,
    gamma: &GammaSet,
    sf: usize,
    af: usize,
    mode: BackupMode,
    tol: f64,
) -> Result<Vec<GammaVector>> {
    let beta = game.model().beta();
    let am = action_model(game, policy, sf, af);
    if let BackupMode::Enumerate { cap } = mode {
        let count: f64 = am.terms.iter().map(|((s, _), _)| gamma.get(*s).len() as f64).product();
        if count > cap as f64 {
            return Err(Error::CandidateCap { candidates: count, cap });
        }
    }
    let mut acc = vec![GammaVector::new(am.cost, af)];
    for ((next_sf, zf), rows) in &am.terms {
        let succ = gamma.get(*next_sf);
        if succ.is_empty() {
            return Err(Error::EmptyGammaSet { state: *next_sf });
        }
        let projected: Vec<GammaVector> = succ
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut v = GammaVector::new(project(rows, beta, &g.values), af);
                v.provenance.insert((*next_sf, *zf), i);
                v
            })
            .collect();
        acc = match mode {
            BackupMode::Incremental => purge_with(cross_sum(&acc, &purge_with(projected, tol)?), tol)?,
            BackupMode::Enumerate { .. } => cross_sum(&acc, &projected),
        };
    }
    Ok(acc)
}

/// One application of the follower's dynamic-programming operator.
///
/// For each follower state and action, builds every vector
/// `γ'(w^L) = Σ_{a^L} π^L(a^L|w^L) [c^F(s,a) + β Σ_{z',s'} P(z',s'|s,a) γ^{s^F',z^F'}(w^L')]`
/// with `w^L'` the advanced leader window, pools the actions, and purges.
pub fn backup(game: &Game, policy: &FiniteMemoryPolicy, gamma: &GammaSet, mode: BackupMode) -> Result<GammaSet> {
    backup_with(game, policy, gamma, mode, WITNESS_TOL)
}

/// [`backup`] with a custom pruning tolerance (see [`super::purge_with`]).
pub fn backup_with(
    game: &Game,
    policy: &FiniteMemoryPolicy,
    gamma: &GammaSet,
    mode: BackupMode,
    tol: f64,
) -> Result<GammaSet> {
    policy.check_space(game.leader())?;
    let d = game.model().dims();
    if gamma.states() != d.follower_states {
        return Err(Error::LengthMismatch {
            expected: d.follower_states,
            actual: gamma.states(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..d.follower_states)
        .flat_map(|sf| (0..d.follower_actions).map(move |af| (sf, af)))
        .collect();
    let per_action: Vec<Vec<GammaVector>> = pairs
        .par_iter()
        .map(|&(sf, af)| backup_action(game, policy, gamma, sf, af, mode, tol))
        .collect::<Result<_>>()?;
    let mut grouped: Vec<Vec<GammaVector>> = vec![Vec::new(); d.follower_states];
    for ((sf, _), vs) in pairs.iter().zip(per_action) {
        grouped[*sf].extend(vs);
    }
    let sets = grouped
        .into_par_iter()
        .map(|vs| purge_with(vs, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaSet::new(sets))
}

fn envelope_min(vs: &[GammaVector], y: &[f64]) -> f64 {
    vs.iter().map(|v| v.dot(y)).fold(f64::INFINITY, f64::min)
}

/// Sup-norm distance between the value functions of two gamma sets.
pub fn residual(a: &GammaSet, b: &GammaSet, check: ConvergenceCheck) -> Result<f64> {
    let mut worst = 0.0_f64;
    for sf in 0..a.states() {
        let (va, vb) = (a.get(sf), b.get(sf));
        let n = va.first().or(vb.first()).map_or(0, |v| v.values.len());
        match check {
            ConvergenceCheck::Probes => {
                let mut y = vec![0.0; n];
                for i in 0..n {
                    y[i] = 1.0;
                    worst = worst.max((envelope_min(va, &y) - envelope_min(vb, &y)).abs());
                    y[i] = 0.0;
                }
                let u = vec![1.0 / n as f64; n];
                worst = worst.max((envelope_min(va, &u) - envelope_min(vb, &u)).abs());
            }
            ConvergenceCheck::Exact => {
                for (xs, ys) in [(va, vb), (vb, va)] {
                    let others: Vec<&[f64]> = ys.iter().map(|v| v.values.as_slice()).collect();
                    for (i, v) in xs.iter().enumerate() {
                        worst = worst.max(envelope_gap(&v.values, &others, i)?.upper());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Value iteration from the zero gamma set until the residual falls below
/// `ε(1−β)/(2β)` or `max_iter` is reached. A non-converged run is reported
/// through [`SolveReport::converged`], not as an error.
pub fn value_iteration(
    game: &Game,
    policy: &FiniteMemoryPolicy,
    options: &SolveOptions,
) -> Result<(GammaSet, SolveReport)> {
    if !(options.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {} must be positive", options.epsilon)));
    }
    let d = game.model().dims();
    let beta = game.model().beta();
    let threshold = if beta == 0.0 {
        f64::INFINITY
    } else {
        options.epsilon * (1.0 - beta) / (2.0 * beta)
    };
    let tol = options
        .prune_tol
        .unwrap_or((options.epsilon * (1.0 - beta) / 4.0).max(WITNESS_TOL));
    let mut gamma = GammaSet::zero(d.follower_states, game.leader().len(), d.follower_actions);
    let mut report = SolveReport {
        iterations: 0,
        residuals: Vec::new(),
        gamma_counts: Vec::new(),
        epsilon: options.epsilon,
        threshold,
        converged: false,
    };
    while report.iterations < options.max_iter {
        let next = backup_with(game, policy, &gamma, options.mode, tol)?;
        let r = residual(&next, &gamma, options.check)?;
        report.iterations += 1;
        report.residuals.push(r);
        report.gamma_counts.push(next.counts());
        gamma = next;
        if r < threshold {
            report.converged = true;
            break;
        }
    }
    Ok((gamma, report))
}
