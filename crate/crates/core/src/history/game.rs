use crate::error::Result;
use crate::model::{Joint, PomgModel};

use super::{enumerate_windows, Agent, Belief, WindowOptions, WindowSpace};

/// A model together with both agents' window spaces.
#[derive(Clone, Debug)]
pub struct Game {
    model: PomgModel,
    leader: WindowSpace,
    follower: WindowSpace,
}

/// The follower's sufficient statistic at epoch 0 for one starting state.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialStatistic {
    pub follower_state: usize,
    /// Marginal probability of starting in `follower_state`.
    pub weight: f64,
    pub belief: Belief,
}

impl Game {
    pub fn new(model: PomgModel, options: &WindowOptions) -> Result<Self> {
        let leader = enumerate_windows(&model, Agent::Leader, options)?;
        let follower = enumerate_windows(&model, Agent::Follower, options)?;
        Ok(Game { model, leader, follower })
    }

    pub fn with_defaults(model: PomgModel) -> Result<Self> {
        Self::new(model, &WindowOptions::default())
    }

    pub fn model(&self) -> &PomgModel {
        &self.model
    }

    pub fn leader(&self) -> &WindowSpace {
        &self.leader
    }

    pub fn follower(&self) -> &WindowSpace {
        &self.follower
    }

    pub fn space(&self, agent: Agent) -> &WindowSpace {
        match agent {
            Agent::Leader => &self.leader,
            Agent::Follower => &self.follower,
        }
    }

    /// Initial window-pair distribution: the model's initial joint-state
    /// distribution placed on the two startup windows. Entries are
    /// `(leader window, follower window, probability)` for positive mass only.
    pub fn initial_pairs(&self) -> Vec<(usize, usize, f64)> {
        let d = self.model.dims();
        d.states()
            .filter_map(|s| {
                let p = self.model.initial(s);
                (p > 0.0).then(|| {
                    let l = self.leader.startup(s.leader).expect("startup window present");
                    let f = self.follower.startup(s.follower).expect("startup window present");
                    (l, f, p)
                })
            })
            .collect()
    }

    /// For each follower state with positive initial mass, the follower's
    /// exact epoch-0 belief over leader startup windows.
    pub fn initial_statistics(&self) -> Vec<InitialStatistic> {
        let d = self.model.dims();
        let marginal = self.model.initial_follower_marginal();
        let mut out = Vec::new();
        for (sf, &m) in marginal.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let mut weights = vec![0.0; self.leader.len()];
            for sl in 0..d.leader_states {
                let p = self.model.initial(Joint::new(sl, sf));
                if p > 0.0 {
                    weights[self.leader.startup(sl).expect("startup window present")] += p / m;
                }
            }
            out.push(InitialStatistic {
                follower_state: sf,
                weight: m,
                belief: Belief::from_weights_unchecked(Agent::Follower, weights),
            });
        }
        out
    }
}
