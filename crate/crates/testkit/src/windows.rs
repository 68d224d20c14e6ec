//! Window spaces rebuilt straight from the definition: a window is the
//! newest-first list of the last `τ` slots `(z(t), s(t), a(t−1))`, with the
//! epoch-0 slot carrying only a state and older slots empty.

use std::collections::{BTreeSet, HashMap};

use pomg_core::history::{Agent, Window};
use pomg_core::model::{Joint, PomgModel};

pub type Slot = (Option<usize>, Option<usize>, Option<usize>);

/// Newest slot first.
pub type Slots = Vec<Slot>;

pub fn startup(tau: usize, state: usize) -> Slots {
    let mut w = vec![(None, None, None); tau];
    w[0] = (None, Some(state), None);
    w
}

/// Drops the oldest slot and puts `(z, s, a)` in front.
pub fn advance(w: &Slots, z: usize, s: usize, a: usize) -> Slots {
    let mut out = Vec::with_capacity(w.len());
    out.push((Some(z), Some(s), Some(a)));
    out.extend_from_slice(&w[..w.len() - 1]);
    out
}

pub fn to_window(w: &Slots) -> Window {
    Window {
        observations: w.iter().map(|s| s.0).collect(),
        states: w.iter().map(|s| s.1).collect(),
        actions: w.iter().map(|s| s.2).collect(),
    }
}

pub fn from_window(w: &Window) -> Slots {
    (0..w.observations.len())
        .map(|k| (w.observations[k], w.states[k], w.actions[k]))
        .collect()
}

fn split(agent: Agent, j: Joint) -> (usize, usize) {
    match agent {
        Agent::Leader => (j.leader, j.follower),
        Agent::Follower => (j.follower, j.leader),
    }
}

fn join(agent: Agent, own: usize, other: usize) -> Joint {
    match agent {
        Agent::Leader => Joint::new(own, other),
        Agent::Follower => Joint::new(other, own),
    }
}

/// Every window of `agent` reachable from a startup window with positive
/// initial marginal, where the other agent's state and both actions range
/// freely. Computed as a plain fixed point over the whole set.
pub fn reachable(model: &PomgModel, agent: Agent) -> BTreeSet<Slots> {
    let d = model.dims();
    let (n_own, n_other) = match agent {
        Agent::Leader => (d.leader_states, d.follower_states),
        Agent::Follower => (d.follower_states, d.leader_states),
    };
    let (na_own, na_other) = match agent {
        Agent::Leader => (d.leader_actions, d.follower_actions),
        Agent::Follower => (d.follower_actions, d.leader_actions),
    };
    let mut set = BTreeSet::new();
    for own in 0..n_own {
        let mass: f64 = (0..n_other).map(|o| model.initial(join(agent, own, o))).sum();
        if mass > 0.0 {
            set.insert(startup(model.tau(), own));
        }
    }
    loop {
        let mut grown = set.clone();
        for w in &set {
            let own = w[0].1.expect("newest slot holds a state");
            for other in 0..n_other {
                let s = join(agent, own, other);
                for a_own in 0..na_own {
                    for a_other in 0..na_other {
                        let a = join(agent, a_own, a_other);
                        for z in d.observations() {
                            for next in d.states() {
                                if model.prob(s, a, z, next) > 0.0 {
                                    let (z_own, _) = split(agent, z);
                                    let (s_own, _) = split(agent, next);
                                    grown.insert(advance(w, z_own, s_own, a_own));
                                }
                            }
                        }
                    }
                }
            }
        }
        if grown.len() == set.len() {
            return set;
        }
        set = grown;
    }
}

/// Successor lookup over a fixed list of windows.
pub struct Successors {
    index: HashMap<Slots, usize>,
    windows: Vec<Slots>,
}

impl Successors {
    pub fn new(windows: &[Window]) -> Self {
        let windows: Vec<Slots> = windows.iter().map(from_window).collect();
        let index = windows.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Successors { index, windows }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn state(&self, i: usize) -> usize {
        self.windows[i][0].1.expect("newest slot holds a state")
    }

    pub fn next(&self, i: usize, z: usize, s: usize, a: usize) -> usize {
        let w = advance(&self.windows[i], z, s, a);
        *self
            .index
            .get(&w)
            .unwrap_or_else(|| panic!("successor {w:?} missing from the window list"))
    }

    pub fn startup(&self, tau: usize, state: usize) -> Option<usize> {
        self.index.get(&startup(tau, state)).copied()
    }
}
