use super::{Dims, Joint, ModelParts, PomgModel, PROB_TOL};
use crate::error::{Error, Result};

/// Per-agent observation channels.
///
/// `leader_channel` holds `P(z^L' | s^F', a)` and `follower_channel` holds
/// `P(z^F' | s^L', a)`, both row-stochastic and indexed by the joint action.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredObservation {
    dims: Dims,
    leader_channel: Vec<f64>,
    follower_channel: Vec<f64>,
}

impl FactoredObservation {
    /// `leader_channel` is `[joint action][s^F'][z^L']`, `follower_channel` is
    /// `[joint action][s^L'][z^F']`, joint actions ordered by [`Dims::action_index`].
    pub fn new(dims: Dims, leader_channel: Vec<f64>, follower_channel: Vec<f64>) -> Result<Self> {
        let na = dims.joint_actions();
        let mut errors = Vec::new();
        check_rows(
            "leader channel",
            &leader_channel,
            na * dims.follower_states,
            dims.leader_observations,
            &mut errors,
        );
        check_rows(
            "follower channel",
            &follower_channel,
            na * dims.leader_states,
            dims.follower_observations,
            &mut errors,
        );
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(FactoredObservation {
            dims,
            leader_channel,
            follower_channel,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn leader_row(&self, a: Joint, next_follower: usize) -> &[f64] {
        let n = self.dims.leader_observations;
        let r = self.dims.action_index(a) * self.dims.follower_states + next_follower;
        &self.leader_channel[r * n..(r + 1) * n]
    }

    pub fn follower_row(&self, a: Joint, next_leader: usize) -> &[f64] {
        let n = self.dims.follower_observations;
        let r = self.dims.action_index(a) * self.dims.leader_states + next_leader;
        &self.follower_channel[r * n..(r + 1) * n]
    }

    pub fn leader_channel(&self) -> &[f64] {
        &self.leader_channel
    }

    pub fn follower_channel(&self) -> &[f64] {
        &self.follower_channel
    }

    /// Rebuilds the joint kernel `P(s'|s,a) P^F(z^F'|s^L',a) P^L(z^L'|s^F',a)`
    /// from `model`'s state transitions and these channels.
    pub fn rebuild(&self, model: &PomgModel) -> Result<PomgModel> {
        let d = model.dims();
        if d != self.dims {
            return Err(Error::InvalidParameter(
                "channel dimensions do not match the model".into(),
            ));
        }
        let mut parts: ModelParts = model.parts().clone();
        parts.dynamics.iter_mut().for_each(|p| *p = 0.0);
        for s in d.states() {
            for a in d.actions() {
                for next in d.states() {
                    let t = model.transition(s, a, next);
                    if t == 0.0 {
                        continue;
                    }
                    let fz = self.follower_row(a, next.leader);
                    let lz = self.leader_row(a, next.follower);
                    for z in d.observations() {
                        let p = t * fz[z.follower] * lz[z.leader];
                        if p != 0.0 {
                            parts.set_prob(s, a, z, next, p);
                        }
                    }
                }
            }
        }
        PomgModel::new(parts)
    }
}

fn check_rows(what: &str, table: &[f64], rows: usize, width: usize, errors: &mut Vec<String>) {
    if table.len() != rows * width {
        errors.push(format!("{what} has {} entries, expected {}", table.len(), rows * width));
        return;
    }
    for (r, row) in table.chunks(width).enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            errors.push(format!("{what} row {r} has a negative or non-finite entry"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            errors.push(format!("{what} row {r} sums to {sum}"));
        }
    }
}

/// Recovers the per-agent observation channels when the joint observation
/// kernel factorizes as `P(z^F'|s^L',a) P(z^L'|s^F',a)` within [`PROB_TOL`].
///
/// Channel rows for `(a, s')` combinations that never occur with positive
/// probability are set to uniform.
pub fn validate_factorization(model: &PomgModel) -> Option<FactoredObservation> {
    let d = model.dims();
    let na = d.joint_actions();
    let nzl = d.leader_observations;
    let nzf = d.follower_observations;
    let mut leader = vec![f64::NAN; na * d.follower_states * nzl];
    let mut follower = vec![f64::NAN; na * d.leader_states * nzf];

    // First positive-probability occurrence fixes each channel row.
    for a in d.actions() {
        let ai = d.action_index(a);
        for s in d.states() {
            for next in d.states() {
                let t = model.transition(s, a, next);
                if t <= 0.0 {
                    continue;
                }
                let fr = (ai * d.leader_states + next.leader) * nzf;
                if follower[fr].is_nan() {
                    for zf in 0..nzf {
                        let m: f64 = (0..nzl)
                            .map(|zl| model.prob(s, a, Joint::new(zl, zf), next))
                            .sum();
                        follower[fr + zf] = m / t;
                    }
                }
                let lr = (ai * d.follower_states + next.follower) * nzl;
                if leader[lr].is_nan() {
                    for zl in 0..nzl {
                        let m: f64 = (0..nzf)
                            .map(|zf| model.prob(s, a, Joint::new(zl, zf), next))
                            .sum();
                        leader[lr + zl] = m / t;
                    }
                }
            }
        }
    }
    for chunk in leader.chunks_mut(nzl) {
        if chunk[0].is_nan() {
            chunk.iter_mut().for_each(|p| *p = 1.0 / nzl as f64);
        }
    }
    for chunk in follower.chunks_mut(nzf) {
        if chunk[0].is_nan() {
            chunk.iter_mut().for_each(|p| *p = 1.0 / nzf as f64);
        }
    }

    let channels = FactoredObservation {
        dims: d,
        leader_channel: leader,
        follower_channel: follower,
    };
    for s in d.states() {
        for a in d.actions() {
            for next in d.states() {
                let t = model.transition(s, a, next);
                let fz = channels.follower_row(a, next.leader);
                let lz = channels.leader_row(a, next.follower);
                for z in d.observations() {
                    let expected = t * fz[z.follower] * lz[z.leader];
                    if (model.prob(s, a, z, next) - expected).abs() > PROB_TOL {
                        return None;
                    }
                }
            }
        }
    }
    Some(channels)
}
