//! The follower's belief over leader windows after one step, by Bayes' rule.

use pomg_core::history::Game;
use pomg_core::model::Joint;
use pomg_core::policy::FiniteMemoryPolicy;

use crate::windows::Successors;

/// Joint probability of `(z^F', s^F')` and each next leader window, given
/// belief `y` over current leader windows, follower state `sf` and action
/// `af`. Returns the unnormalized posterior; its sum is the likelihood.
pub fn joint_next(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    succ: &Successors,
    y: &[f64],
    sf: usize,
    af: usize,
    zf: usize,
    next_sf: usize,
) -> Vec<f64> {
    let model = game.model();
    let d = model.dims();
    let mut out = vec![0.0; succ.len()];
    for (w, &yw) in y.iter().enumerate() {
        if yw == 0.0 {
            continue;
        }
        let s = Joint::new(succ.state(w), sf);
        for al in 0..d.leader_actions {
            let pa = leader.prob(w, al);
            if pa == 0.0 {
                continue;
            }
            let a = Joint::new(al, af);
            for zl in 0..d.leader_observations {
                for sl in 0..d.leader_states {
                    let p = model.prob(s, a, Joint::new(zl, zf), Joint::new(sl, next_sf));
                    if p > 0.0 {
                        out[succ.next(w, zl, sl, al)] += yw * pa * p;
                    }
                }
            }
        }
    }
    out
}

/// Normalized posterior and likelihood; `None` when the likelihood is zero.
pub fn bayes_update(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    y: &[f64],
    sf: usize,
    af: usize,
    zf: usize,
    next_sf: usize,
) -> Option<(Vec<f64>, f64)> {
    let succ = Successors::new(game.leader().windows());
    let joint = joint_next(game, leader, &succ, y, sf, af, zf, next_sf);
    let like: f64 = joint.iter().sum();
    (like > 0.0).then(|| (joint.iter().map(|p| p / like).collect(), like))
}
