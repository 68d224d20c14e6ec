//! Finite-horizon values of the follower's problem against a fixed leader
//! policy, by exact dynamic programming over vector sets and by literal
//! enumeration of the follower's action/observation tree.

use pomg_core::history::Game;
use pomg_core::model::Joint;
use pomg_core::policy::FiniteMemoryPolicy;

use crate::envelope::{envelope, reduce};
use crate::posterior::joint_next;
use crate::windows::Successors;

/// Expected immediate follower cost at leader window `w`.
fn mean_cost(game: &Game, leader: &FiniteMemoryPolicy, succ: &Successors, w: usize, sf: usize, af: usize) -> f64 {
    let m = game.model();
    (0..m.dims().leader_actions)
        .map(|al| leader.prob(w, al) * m.follower_cost(Joint::new(succ.state(w), sf), Joint::new(al, af)))
        .sum()
}

/// Vector sets (one per follower state) whose lower envelope is the
/// `horizon`-step value function.
pub fn value_sets(game: &Game, leader: &FiniteMemoryPolicy, horizon: usize) -> Vec<Vec<Vec<f64>>> {
    let m = game.model();
    let d = m.dims();
    let beta = m.beta();
    let succ = Successors::new(game.leader().windows());
    let nw = succ.len();
    let mut sets: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; nw]]; d.follower_states];
    for _ in 0..horizon {
        let mut next_sets = Vec::with_capacity(d.follower_states);
        for sf in 0..d.follower_states {
            let mut all = Vec::new();
            for af in 0..d.follower_actions {
                let base: Vec<f64> = (0..nw).map(|w| mean_cost(game, leader, &succ, w, sf, af)).collect();
                let mut acc = vec![base];
                for zf in 0..d.follower_observations {
                    for nsf in 0..d.follower_states {
                        let proj: Vec<Vec<f64>> = sets[nsf]
                            .iter()
                            .map(|alpha| project(game, leader, &succ, alpha, sf, af, zf, nsf))
                            .collect();
                        let mut sums = Vec::with_capacity(acc.len() * proj.len());
                        for a in &acc {
                            for g in &proj {
                                sums.push(a.iter().zip(g).map(|(x, y)| x + beta * y).collect());
                            }
                        }
                        acc = reduce(sums, 1e-12);
                    }
                }
                all.extend(acc);
            }
            next_sets.push(reduce(all, 1e-12));
        }
        sets = next_sets;
    }
    sets
}

/// `g(w) = Σ_{a^L, z^L', s^L'} π(a^L|w) P(z', s' | s, a) α(next window)`
/// for the fixed follower outcome `(z^F', s^F')`.
#[allow(clippy::too_many_arguments)]
fn project(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    succ: &Successors,
    alpha: &[f64],
    sf: usize,
    af: usize,
    zf: usize,
    nsf: usize,
) -> Vec<f64> {
    let m = game.model();
    let d = m.dims();
    (0..succ.len())
        .map(|w| {
            let s = Joint::new(succ.state(w), sf);
            let mut total = 0.0;
            for al in 0..d.leader_actions {
                let pa = leader.prob(w, al);
                if pa == 0.0 {
                    continue;
                }
                for zl in 0..d.leader_observations {
                    for sl in 0..d.leader_states {
                        let p = m.prob(s, Joint::new(al, af), Joint::new(zl, zf), Joint::new(sl, nsf));
                        if p > 0.0 {
                            total += pa * p * alpha[succ.next(w, zl, sl, al)];
                        }
                    }
                }
            }
            total
        })
        .collect()
}

pub fn value(sets: &[Vec<Vec<f64>>], sf: usize, y: &[f64]) -> f64 {
    envelope(&sets[sf], y)
}

/// `horizon`-step value by recursing over every follower action and every
/// positive-probability `(z^F', s^F')`, updating the belief by Bayes' rule.
pub fn tree_value(game: &Game, leader: &FiniteMemoryPolicy, sf: usize, y: &[f64], horizon: usize) -> f64 {
    let succ = Successors::new(game.leader().windows());
    tree(game, leader, &succ, sf, y, horizon)
}

fn tree(game: &Game, leader: &FiniteMemoryPolicy, succ: &Successors, sf: usize, y: &[f64], horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let m = game.model();
    let d = m.dims();
    let mut best = f64::INFINITY;
    for af in 0..d.follower_actions {
        let mut v: f64 = y
            .iter()
            .enumerate()
            .map(|(w, p)| p * mean_cost(game, leader, succ, w, sf, af))
            .sum();
        for zf in 0..d.follower_observations {
            for nsf in 0..d.follower_states {
                let joint = joint_next(game, leader, succ, y, sf, af, zf, nsf);
                let like: f64 = joint.iter().sum();
                if like > 0.0 {
                    let post: Vec<f64> = joint.iter().map(|p| p / like).collect();
                    v += m.beta() * like * tree(game, leader, succ, nsf, &post, horizon - 1);
                }
            }
        }
        best = best.min(v);
    }
    best
}

/// `β^T · max|c^F| / (1 − β)`: how far a `T`-step value can sit from the
/// infinite-horizon one.
pub fn tail_bound(game: &Game, horizon: usize) -> f64 {
    let m = game.model();
    let d = m.dims();
    let mut cmax: f64 = 0.0;
    for s in d.states() {
        for a in d.actions() {
            cmax = cmax.max(m.follower_cost(s, a).abs());
        }
    }
    m.beta().powi(horizon as i32) * cmax / (1.0 - m.beta())
}
