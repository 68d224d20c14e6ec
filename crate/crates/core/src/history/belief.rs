use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Joint, PROB_TOL};
use crate::policy::FiniteMemoryPolicy;

use super::{Agent, Game, Step, WindowSpace};

/// Likelihood below which an observation is treated as impossible.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

/// A probability vector over the opposing agent's windows.
///
/// `owner` is the agent holding the belief, so a follower-owned belief is
/// indexed by leader windows.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    owner: Agent,
    weights: Vec<f64>,
}

impl Belief {
    pub fn new(owner: Agent, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("belief over an empty window space".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!("belief weight {w} is not a probability")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidParameter(format!("belief weights sum to {sum}")));
        }
        Ok(Belief { owner, weights })
    }

    pub(crate) fn from_weights_unchecked(owner: Agent, weights: Vec<f64>) -> Self {
        Belief { owner, weights }
    }

    /// All mass on window `i` of a space with `n` windows.
    pub fn point(owner: Agent, n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Belief { owner, weights }
    }

    pub fn owner(&self) -> Agent {
        self.owner
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Equal weight on every window of `space`, owned by the other agent.
pub fn uniform_belief(space: &WindowSpace) -> Belief {
    let n = space.len();
    assert!(n > 0, "uniform belief over an empty window space");
    Belief {
        owner: space.agent().other(),
        weights: vec![1.0 / n as f64; n],
    }
}

/// One Bayes step of the follower's belief over leader windows.
///
/// Given the follower's current state `sf`, its action `af`, and the next
/// follower observation and state, returns the posterior over next leader
/// windows together with the likelihood of the observed pair.
pub fn belief_update(
    game: &Game,
    leader_policy: &FiniteMemoryPolicy,
    y: &Belief,
    sf: usize,
    af: usize,
    observation: usize,
    next_sf: usize,
) -> Result<(Belief, f64)> {
    let model = game.model();
    let space = game.leader();
    if y.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            actual: y.len(),
        });
    }
    if leader_policy.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            actual: leader_policy.len(),
        });
    }
    let mut post = vec![0.0; space.len()];
    for (wl, &mass) in y.weights().iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let s = Joint::new(space.window(wl).current_state(), sf);
        for (al, &pa) in leader_policy.row(wl).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for o in model.outcomes(s, Joint::new(al, af)) {
                if o.observation.follower != observation || o.next.follower != next_sf {
                    continue;
                }
                let next = space
                    .successor(wl, Step::new(o.observation.leader, o.next.leader, al))
                    .expect("leader window space is closed under the dynamics");
                post[next] += mass * pa * o.p;
            }
        }
    }
    let likelihood: f64 = post.iter().sum();
    if likelihood < LIKELIHOOD_FLOOR {
        return Err(Error::ImpossibleObservation {
            likelihood,
            threshold: LIKELIHOOD_FLOOR,
        });
    }
    post.iter_mut().for_each(|p| *p /= likelihood);
    Ok((Belief::from_weights_unchecked(Agent::Follower, post), likelihood))
}

/// CSV dump: window index, rendered window, weight.
pub fn belief_csv(space: &WindowSpace, y: &Belief) -> String {
    let mut out = String::from("window,window_string,weight\n");
    for (i, w) in y.weights().iter().enumerate() {
        let _ = writeln!(out, "{i},{},{w:e}", space.render(i));
    }
    out
}
