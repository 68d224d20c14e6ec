//! Value determination for a pair of finite-memory policies.
//!
//! The expected discounted cost of a fixed policy pair, as a function of the
//! two agents' current windows, is the unique fixed point of
//! `g = c̄ + β M g` over window pairs, where `M` pushes the joint dynamics
//! through both windows' advance maps.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finite_memory::approximate_policy;
use crate::follower::{value_at, value_iteration, GammaSet, SolveOptions, SolveReport};
use crate::history::{Game, Step};
use crate::model::Joint;
use crate::policy::FiniteMemoryPolicy;

/// Which cost table a [`GTable`] is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Leader(usize),
    Follower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    /// Largest pair count solved by dense LU.
    pub direct_limit: usize,
    /// Largest pair count accepted at all.
    pub max_pairs: usize,
    /// Target accuracy of the iterative solver, used through the stopping
    /// rule `tolerance (1−β)/(2β)` on successive iterates.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Overrides the size-based choice of solver.
    pub force: Option<SolverKind>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            direct_limit: 5_000,
            max_pairs: 4_000_000,
            tolerance: 1e-10,
            max_iter: 1_000_000,
            force: None,
        }
    }
}

/// `g*` for one criterion, indexed by `(leader window, follower window)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GTable {
    pub criterion: Criterion,
    n_follower: usize,
    values: Vec<f64>,
    /// Sup-norm residual of the fixed-point equation at `values`.
    pub residual: f64,
    pub solver: SolverKind,
}

impl GTable {
    pub fn get(&self, wl: usize, wf: usize) -> f64 {
        self.values[wl * self.n_follower + wf]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The linear system over window pairs for one policy pair.
#[derive(Clone, Debug)]
pub struct PairSystem {
    n_leader: usize,
    n_follower: usize,
    beta: f64,
    rows: Vec<Vec<(usize, f64)>>,
    /// Expected one-step costs: leader criteria in order, then the follower.
    costs: Vec<Vec<f64>>,
}

impl PairSystem {
    pub fn build(
        game: &Game,
        leader: &FiniteMemoryPolicy,
        follower: &FiniteMemoryPolicy,
        options: &EvalOptions,
    ) -> Result<Self> {
        leader.check_space(game.leader())?;
        follower.check_space(game.follower())?;
        let model = game.model();
        let (ls, fs) = (game.leader(), game.follower());
        let (nl, nf) = (ls.len(), fs.len());
        let pairs = nl * nf;
        if pairs > options.max_pairs {
            return Err(Error::DimensionCap {
                pairs,
                cap: options.max_pairs,
            });
        }
        let nc = model.criteria();
        let assembled: Vec<(Vec<(usize, f64)>, Vec<f64>)> = (0..pairs)
            .into_par_iter()
            .map(|k| {
                let (il, i_f) = (k / nf, k % nf);
                let s = Joint::new(ls.window(il).current_state(), fs.window(i_f).current_state());
                let mut row: BTreeMap<usize, f64> = BTreeMap::new();
                let mut cost = vec![0.0; nc + 1];
                for (al, &pl) in leader.row(il).iter().enumerate() {
                    if pl == 0.0 {
                        continue;
                    }
                    for (af, &pf) in follower.row(i_f).iter().enumerate() {
                        if pf == 0.0 {
                            continue;
                        }
                        let q = pl * pf;
                        let a = Joint::new(al, af);
                        for (c, slot) in cost.iter_mut().enumerate().take(nc) {
                            *slot += q * model.leader_cost(c, s, a);
                        }
                        cost[nc] += q * model.follower_cost(s, a);
                        for o in model.outcomes(s, a) {
                            let jl = ls
                                .successor(il, Step::new(o.observation.leader, o.next.leader, al))
                                .expect("leader window space is closed under the dynamics");
                            let jf = fs
                                .successor(i_f, Step::new(o.observation.follower, o.next.follower, af))
                                .expect("follower window space is closed under the dynamics");
                            *row.entry(jl * nf + jf).or_insert(0.0) += q * o.p;
                        }
                    }
                }
                (row.into_iter().collect(), cost)
            })
            .collect();
        let mut rows = Vec::with_capacity(pairs);
        let mut costs = vec![Vec::with_capacity(pairs); nc + 1];
        for (row, cost) in assembled {
            rows.push(row);
            for (c, v) in cost.into_iter().enumerate() {
                costs[c].push(v);
            }
        }
        Ok(PairSystem {
            n_leader: nl,
            n_follower: nf,
            beta: model.beta(),
            rows,
            costs,
        })
    }

    pub fn pairs(&self) -> usize {
        self.rows.len()
    }

    /// Sparse row of `M` for pair `k = leader * |W^F| + follower`.
    pub fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.rows[k]
    }

    fn cost_index(&self, criterion: Criterion) -> Result<usize> {
        let nc = self.costs.len() - 1;
        match criterion {
            Criterion::Leader(i) if i < nc => Ok(i),
            Criterion::Leader(i) => Err(Error::InvalidParameter(format!(
                "criterion {i} out of range (model has {nc})"
            ))),
            Criterion::Follower => Ok(nc),
        }
    }

    /// Expected one-step cost per pair.
    pub fn cost(&self, criterion: Criterion) -> Result<&[f64]> {
        Ok(&self.costs[self.cost_index(criterion)?])
    }

    fn apply(&self, cost: &[f64], g: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .zip(cost.par_iter())
            .map(|(row, c)| c + self.beta * row.iter().map(|&(j, p)| p * g[j]).sum::<f64>())
            .collect()
    }

    /// `max_k |g_k − c̄_k − β (M g)_k|`.
    pub fn residual(&self, criterion: Criterion, g: &[f64]) -> Result<f64> {
        let cost = self.cost(criterion)?;
        Ok(self
            .apply(cost, g)
            .iter()
            .zip(g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Solves for several criteria, factoring the system once.
    pub fn solve(&self, criteria: &[Criterion], options: &EvalOptions) -> Result<Vec<GTable>> {
        let n = self.pairs();
        let kind = options.force.unwrap_or(if n <= options.direct_limit {
            SolverKind::Direct
        } else {
            SolverKind::Iterative
        });
        let mut solutions: Vec<Vec<f64>> = Vec::with_capacity(criteria.len());
        match kind {
            SolverKind::Direct => {
                let mut a = DMatrix::<f64>::identity(n, n);
                for (k, row) in self.rows.iter().enumerate() {
                    for &(j, p) in row {
                        a[(k, j)] -= self.beta * p;
                    }
                }
                let lu = a.lu();
                for &c in criteria {
                    let b = DVector::from_column_slice(self.cost(c)?);
                    let x = lu.solve(&b).ok_or(Error::Singular)?;
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Singular);
                    }
                    solutions.push(x.as_slice().to_vec());
                }
            }
            SolverKind::Iterative => {
                let stop = if self.beta == 0.0 {
                    f64::INFINITY
                } else {
                    options.tolerance * (1.0 - self.beta) / (2.0 * self.beta)
                };
                for &c in criteria {
                    let cost = self.cost(c)?;
                    let mut g = cost.to_vec();
                    let mut converged = self.beta == 0.0;
                    let mut delta = f64::INFINITY;
                    for _ in 0..options.max_iter {
                        if converged {
                            break;
                        }
                        let next = self.apply(cost, &g);
                        delta = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        g = next;
                        converged = delta < stop;
                    }
                    if !converged {
                        return Err(Error::NonConvergence {
                            iterations: options.max_iter,
                            residual: delta,
                            target: stop,
                        });
                    }
                    solutions.push(g);
                }
            }
        }
        criteria
            .iter()
            .zip(solutions)
            .map(|(&criterion, values)| {
                Ok(GTable {
                    criterion,
                    n_follower: self.n_follower,
                    residual: self.residual(criterion, &values)?,
                    values,
                    solver: kind,
                })
            })
            .collect()
    }

    /// Long-run distribution of the pair chain started from `start`, by power
    /// iteration. Used as an alternative fitness weighting.
    pub fn stationary(&self, start: &[(usize, usize, f64)], tol: f64, max_iter: usize) -> Vec<(usize, usize, f64)> {
        let mut mu = vec![0.0; self.pairs()];
        for &(l, f, p) in start {
            mu[l * self.n_follower + f] += p;
        }
        for _ in 0..max_iter {
            let mut next = vec![0.0; mu.len()];
            for (k, row) in self.rows.iter().enumerate() {
                if mu[k] == 0.0 {
                    continue;
                }
                for &(j, p) in row {
                    next[j] += mu[k] * p;
                }
            }
            let delta = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum::<f64>();
            mu = next;
            if delta < tol {
                break;
            }
        }
        mu.iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, &p)| (k / self.n_follower, k % self.n_follower, p))
            .collect()
    }

    pub fn n_leader(&self) -> usize {
        self.n_leader
    }

    pub fn n_follower(&self) -> usize {
        self.n_follower
    }
}

/// `g*` for one criterion under a policy pair.
pub fn solve_g(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    follower: &FiniteMemoryPolicy,
    criterion: Criterion,
    options: &EvalOptions,
) -> Result<GTable> {
    let system = PairSystem::build(game, leader, follower, options)?;
    Ok(system.solve(&[criterion], options)?.remove(0))
}

/// `Σ weight(w^L, w^F) g(w^L, w^F)` over `(leader window, follower window, weight)` entries.
pub fn leader_value(g: &GTable, weighting: &[(usize, usize, f64)]) -> f64 {
    weighting.iter().map(|&(l, f, p)| p * g.get(l, f)).sum()
}

/// Distribution over window pairs used to turn `g` into scalar fitness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    /// Initial joint-state distribution on the startup windows.
    #[default]
    Initial,
    /// Long-run distribution of the pair chain started from the initial one.
    Stationary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitnessOptions {
    pub solve: SolveOptions,
    pub eval: EvalOptions,
    pub weighting: Weighting,
}

/// Everything produced while scoring one leader policy.
#[derive(Clone, Debug)]
pub struct Fitness {
    /// `(v^L_1, …, v^L_N)`.
    pub values: Vec<f64>,
    /// Follower's expected cost under the pair at the same weighting.
    pub follower_value: f64,
    /// Follower's perfect-memory optimum at the initial statistic.
    pub follower_optimum: f64,
    pub follower_policy: FiniteMemoryPolicy,
    pub unreachable: Vec<usize>,
    pub gamma: GammaSet,
    pub report: SolveReport,
    /// Fixed-point residual per leader criterion, then the follower's.
    pub residuals: Vec<f64>,
    pub leader_digest: String,
    pub follower_digest: String,
    pub weighting: Weighting,
}

/// Follower's optimal value at the epoch-0 sufficient statistic, averaged
/// over its initial state.
pub fn follower_initial_value(game: &Game, gamma: &GammaSet) -> Result<f64> {
    game.initial_statistics()
        .iter()
        .map(|st| Ok(st.weight * value_at(gamma, st.follower_state, &st.belief)?))
        .sum()
}

/// The three-step pipeline: best response, finite-memory compression, and
/// evaluation of every leader criterion under the resulting pair.
pub fn fitness(game: &Game, leader: &FiniteMemoryPolicy, options: &FitnessOptions) -> Result<Fitness> {
    let (gamma, report) = value_iteration(game, leader, &options.solve)?;
    report.ensure_converged()?;
    let approx = approximate_policy(game, leader, &gamma)?;
    let system = PairSystem::build(game, leader, &approx.policy, &options.eval)?;
    let nc = game.model().criteria();
    let mut criteria: Vec<Criterion> = (0..nc).map(Criterion::Leader).collect();
    criteria.push(Criterion::Follower);
    let tables = system.solve(&criteria, &options.eval)?;
    let initial = game.initial_pairs();
    let weights = match options.weighting {
        Weighting::Initial => initial,
        Weighting::Stationary => system.stationary(&initial, 1e-13, 100_000),
    };
    let values: Vec<f64> = tables[..nc].iter().map(|g| leader_value(g, &weights)).collect();
    Ok(Fitness {
        values,
        follower_value: leader_value(&tables[nc], &weights),
        follower_optimum: follower_initial_value(game, &gamma)?,
        leader_digest: leader.digest(),
        follower_digest: approx.policy.digest(),
        follower_policy: approx.policy,
        unreachable: approx.unreachable,
        gamma,
        report,
        residuals: tables.iter().map(|g| g.residual).collect(),
        weighting: options.weighting,
    })
}

/// Outcome of comparing the follower's response with one alternative.
#[derive(Clone, Debug, PartialEq)]
pub struct AlternativeCheck {
    pub value: f64,
    /// `v^F(π^F*) − v^F(ρ^F)`; positive means the alternative did better.
    pub gap: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    /// Follower cost of its computed response at the initial weighting.
    pub response_value: f64,
    /// Perfect-memory optimum from the gamma set.
    pub optimum: f64,
    /// `ε + max(0, response_value − optimum)`.
    pub slack: f64,
    pub alternatives: Vec<AlternativeCheck>,
}

impl EquilibriumReport {
    pub fn violations(&self) -> usize {
        self.alternatives.iter().filter(|a| a.violation).count()
    }
}

/// Checks that no alternative follower policy beats the computed response by
/// more than the value-iteration tolerance plus the finite-memory
/// approximation gap.
pub fn equilibrium_check(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    response: &FiniteMemoryPolicy,
    gamma: &GammaSet,
    epsilon: f64,
    alternatives: &[FiniteMemoryPolicy],
    options: &EvalOptions,
) -> Result<EquilibriumReport> {
    let initial = game.initial_pairs();
    let eval = |pi: &FiniteMemoryPolicy| -> Result<f64> {
        let g = solve_g(game, leader, pi, Criterion::Follower, options)?;
        Ok(leader_value(&g, &initial))
    };
    let response_value = eval(response)?;
    let optimum = follower_initial_value(game, gamma)?;
    let slack = epsilon + (response_value - optimum).max(0.0);
    let alternatives = alternatives
        .par_iter()
        .map(|rho| {
            let value = eval(rho)?;
            let gap = response_value - value;
            Ok(AlternativeCheck {
                value,
                gap,
                violation: gap > slack + 1e-9,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EquilibriumReport {
        response_value,
        optimum,
        slack,
        alternatives,
    })
}
