//! Monte Carlo estimates of discounted costs under a policy pair.

use pomg_core::history::Game;
use pomg_core::model::Joint;
use pomg_core::policy::FiniteMemoryPolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::windows::Successors;

#[derive(Clone, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

fn draw<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Discounted costs over `horizon` epochs from the model's initial
/// distribution: one estimate per leader criterion, then the follower's.
pub fn rollout(
    game: &Game,
    leader: &FiniteMemoryPolicy,
    follower: &FiniteMemoryPolicy,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Vec<Estimate> {
    let m = game.model();
    let d = m.dims();
    let nc = m.criteria();
    let tau = m.tau();
    let ls = Successors::new(game.leader().windows());
    let fs = Successors::new(game.follower().windows());
    let states: Vec<Joint> = d.states().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; nc + 1];
    let mut sum_sq = vec![0.0; nc + 1];
    for _ in 0..episodes {
        let mut s = states[draw(&mut rng, states.iter().map(|&s| m.initial(s)))];
        let mut wl = ls.startup(tau, s.leader).expect("leader startup window");
        let mut wf = fs.startup(tau, s.follower).expect("follower startup window");
        let mut total = vec![0.0; nc + 1];
        let mut disc = 1.0;
        for _ in 0..horizon {
            let al = draw(&mut rng, leader.row(wl).iter().copied());
            let af = draw(&mut rng, follower.row(wf).iter().copied());
            let a = Joint::new(al, af);
            for (k, t) in total.iter_mut().take(nc).enumerate() {
                *t += disc * m.leader_cost(k, s, a);
            }
            total[nc] += disc * m.follower_cost(s, a);
            let outcomes = m.outcomes(s, a);
            let o = outcomes[draw(&mut rng, outcomes.iter().map(|o| o.p))];
            wl = ls.next(wl, o.observation.leader, o.next.leader, al);
            wf = fs.next(wf, o.observation.follower, o.next.follower, af);
            s = o.next;
            disc *= m.beta();
        }
        for k in 0..=nc {
            sum[k] += total[k];
            sum_sq[k] += total[k] * total[k];
        }
    }
    let n = episodes as f64;
    (0..=nc)
        .map(|k| {
            let mean = sum[k] / n;
            let var = (sum_sq[k] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            Estimate {
                mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect()
}
