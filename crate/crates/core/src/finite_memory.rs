//! Compressing the follower's perfect-memory best response into a policy on
//! its own information windows.
//!
//! For a full window the belief over leader windows at the window's oldest
//! epoch is unknown; it is taken to be uniform over leader windows and over
//! the follower state just before the window, then the window's recorded
//! steps are replayed through Bayes' rule. Windows that reach back to epoch 0
//! replay from the exact initial conditional instead. The row is the greedy
//! action distribution at the resulting belief.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::follower::{extract_action, GammaSet};
use crate::history::{belief_update, uniform_belief, Agent, Belief, Game, Window};
use crate::model::Joint;
use crate::policy::FiniteMemoryPolicy;

/// Output of [`approximate_policy`].
#[derive(Clone, Debug, PartialEq)]
pub struct Approximation {
    pub policy: FiniteMemoryPolicy,
    /// Follower windows whose replay hit a zero-likelihood step; their rows
    /// are uniform.
    pub unreachable: Vec<usize>,
}

enum Replay {
    Belief(Belief),
    Unreachable,
}

fn startup_prior(game: &Game, s0: usize) -> Option<Belief> {
    let model = game.model();
    let marg: f64 = (0..model.dims().leader_states)
        .map(|sl| model.initial(Joint::new(sl, s0)))
        .sum();
    if marg <= 0.0 {
        return None;
    }
    let mut w = vec![0.0; game.leader().len()];
    for sl in 0..model.dims().leader_states {
        let p = model.initial(Joint::new(sl, s0));
        if p > 0.0 {
            w[game.leader().startup(sl).expect("startup window present")] += p / marg;
        }
    }
    Some(Belief::new(Agent::Follower, w).expect("normalized by construction"))
}

/// Follower belief over leader windows at the newest epoch of `w`.
fn replay(game: &Game, leader_policy: &FiniteMemoryPolicy, w: &Window) -> Result<Replay> {
    let tau = w.tau();
    let (mut y, mut slot) = match w.epoch_zero_slot() {
        Some(k) => match startup_prior(game, w.states[k].expect("epoch-0 slot carries a state")) {
            Some(y) => (y, k),
            None => return Ok(Replay::Unreachable),
        },
        None => {
            // Oldest step: the follower state before the window is unknown,
            // so average the update over a uniform prior on it.
            let j = tau - 1;
            let (af, zf, next) = (
                w.actions[j].expect("full slot"),
                w.observations[j].expect("full slot"),
                w.states[j].expect("full slot"),
            );
            let prior = uniform_belief(game.leader());
            let mut acc = vec![0.0; prior.len()];
            let mut total = 0.0;
            for sf in 0..game.model().dims().follower_states {
                match belief_update(game, leader_policy, &prior, sf, af, zf, next) {
                    Ok((post, lik)) => {
                        total += lik;
                        acc.iter_mut().zip(post.weights()).for_each(|(a, p)| *a += lik * p);
                    }
                    Err(Error::ImpossibleObservation { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            if total <= 0.0 {
                return Ok(Replay::Unreachable);
            }
            acc.iter_mut().for_each(|a| *a /= total);
            (Belief::new(Agent::Follower, acc)?, j)
        }
    };
    while slot > 0 {
        let j = slot - 1;
        let step = belief_update(
            game,
            leader_policy,
            &y,
            w.states[slot].expect("filled slot"),
            w.actions[j].expect("full slot"),
            w.observations[j].expect("full slot"),
            w.states[j].expect("full slot"),
        );
        y = match step {
            Ok((post, _)) => post,
            Err(Error::ImpossibleObservation { .. }) => return Ok(Replay::Unreachable),
            Err(e) => return Err(e),
        };
        slot = j;
    }
    Ok(Replay::Belief(y))
}

/// Finite-memory follower policy from the converged gamma set `gamma` of the
/// best response to `leader_policy`.
pub fn approximate_policy(game: &Game, leader_policy: &FiniteMemoryPolicy, gamma: &GammaSet) -> Result<Approximation> {
    leader_policy.check_space(game.leader())?;
    let space = game.follower();
    let na = space.n_actions();
    let rows: Vec<Option<Vec<f64>>> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let w = space.window(i);
            match replay(game, leader_policy, w)? {
                Replay::Belief(y) => extract_action(gamma, w.current_state(), &y, na).map(Some),
                Replay::Unreachable => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    let mut unreachable = Vec::new();
    let mut table = Vec::with_capacity(space.len() * na);
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => table.extend(r),
            None => {
                unreachable.push(i);
                table.extend(std::iter::repeat_n(1.0 / na as f64, na));
            }
        }
    }
    Ok(Approximation {
        policy: FiniteMemoryPolicy::from_flat(Agent::Follower, na, table)?,
        unreachable,
    })
}

/// The follower's belief over leader windows at the newest epoch of window
/// `i`, as used by [`approximate_policy`]; `None` for unreachable windows.
pub fn window_belief(game: &Game, leader_policy: &FiniteMemoryPolicy, i: usize) -> Result<Option<Belief>> {
    Ok(match replay(game, leader_policy, game.follower().window(i))? {
        Replay::Belief(y) => Some(y),
        Replay::Unreachable => None,
    })
}
