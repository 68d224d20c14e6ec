//! Value of the follower's information.
//!
//! A [`Garbling`] post-processes the follower's observation channel: the
//! garbled channel is `Q(a) = P(a)·R(a)`, with `P(a)` indexed
//! `[s^L'][z^F]` and `R(a)` indexed `[z^F][z^F']`, both row-stochastic.
//! A garbled follower can never do better than the original one, so its
//! optimal expected cost is never lower.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::follower_initial_value;
use crate::follower::{value_at, value_iteration, GammaSet, SolveOptions};
use crate::history::{Agent, Belief, Game, WindowOptions};
use crate::model::{validate_factorization, FactoredObservation, PomgModel, PROB_TOL};
use crate::policy::FiniteMemoryPolicy;

/// One row-stochastic `|Z^F| × |Z^F|` matrix per joint action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Garbling {
    observations: usize,
    /// `[joint action][z][z']`, flattened.
    matrices: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GarblingFile {
    /// Applied to every joint action.
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    /// One matrix per joint action, leader action major.
    #[serde(default)]
    per_action: Option<Vec<Vec<Vec<f64>>>>,
}

impl Garbling {
    pub fn new(observations: usize, matrices: Vec<f64>) -> Result<Self> {
        let block = observations * observations;
        if observations == 0 || matrices.is_empty() || !matrices.len().is_multiple_of(block) {
            return Err(Error::InvalidParameter(format!(
                "garbling has {} entries, not a whole number of {observations}×{observations} matrices",
                matrices.len()
            )));
        }
        let mut errors = Vec::new();
        for (r, row) in matrices.chunks(observations).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > PROB_TOL {
                errors.push(format!(
                    "garbling matrix {} row {} is not a distribution (sum {sum})",
                    r / observations,
                    r % observations
                ));
            }
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(Garbling { observations, matrices })
    }

    /// The same matrix for each of `joint_actions` actions.
    pub fn uniform_over_actions(joint_actions: usize, matrix: &[f64]) -> Result<Self> {
        let n = (matrix.len() as f64).sqrt() as usize;
        if n * n != matrix.len() {
            return Err(Error::InvalidParameter("garbling matrix is not square".into()));
        }
        Garbling::new(n, matrix.repeat(joint_actions))
    }

    pub fn identity(joint_actions: usize, observations: usize) -> Self {
        let mut m = vec![0.0; observations * observations];
        for z in 0..observations {
            m[z * observations + z] = 1.0;
        }
        Garbling {
            observations,
            matrices: m.repeat(joint_actions),
        }
    }

    /// `(1−λ)·I + λ·J/|Z|`: with probability `λ` the follower's signal is
    /// replaced by a uniformly random one.
    pub fn symmetric_noise(joint_actions: usize, observations: usize, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("noise level {lambda} is outside [0, 1]")));
        }
        let n = observations;
        let mut m = vec![lambda / n as f64; n * n];
        for z in 0..n {
            m[z * n + z] += 1.0 - lambda;
        }
        Garbling::uniform_over_actions(joint_actions, &m)
    }

    /// Every row drawn independently and uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, joint_actions: usize, observations: usize) -> Self {
        let mut matrices = Vec::with_capacity(joint_actions * observations * observations);
        for _ in 0..joint_actions * observations {
            let draws: Vec<f64> = (0..observations).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            matrices.extend(draws.iter().map(|d| d / total));
        }
        Garbling { observations, matrices }
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn joint_actions(&self) -> usize {
        self.matrices.len() / (self.observations * self.observations)
    }

    pub fn matrix(&self, action: usize) -> &[f64] {
        let b = self.observations * self.observations;
        &self.matrices[action * b..(action + 1) * b]
    }

    /// The garbling that applies `self` first and then `then`.
    pub fn then(&self, then: &Garbling) -> Result<Garbling> {
        if self.observations != then.observations || self.joint_actions() != then.joint_actions() {
            return Err(Error::InvalidParameter("garbling shapes differ".into()));
        }
        let n = self.observations;
        let mut out = Vec::with_capacity(self.matrices.len());
        for a in 0..self.joint_actions() {
            out.extend(mat_mul(self.matrix(a), then.matrix(a), n, n, n));
        }
        Garbling::new(n, out)
    }

    /// Reads `{"matrix": [[..]]}` or `{"per_action": [[[..]]]}`.
    pub fn from_json(text: &str, joint_actions: usize) -> Result<Self> {
        let file: GarblingFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match (file.matrix, file.per_action) {
            (Some(m), None) => Garbling::uniform_over_actions(joint_actions, &m.concat()),
            (None, Some(per)) => {
                if per.len() != joint_actions {
                    return Err(Error::LengthMismatch {
                        expected: joint_actions,
                        actual: per.len(),
                    });
                }
                let n = per[0].len();
                if per.iter().flatten().any(|row| row.len() != n) || per.iter().any(|m| m.len() != n) {
                    return Err(Error::InvalidParameter("garbling matrices are not all square".into()));
                }
                Garbling::new(n, per.concat().concat())
            }
            _ => Err(Error::Parse("a garbling file needs exactly one of `matrix` or `per_action`".into())),
        }
    }

    pub fn to_json(&self) -> String {
        let n = self.observations;
        let per: Vec<Vec<&[f64]>> = (0..self.joint_actions())
            .map(|a| self.matrix(a).chunks(n).collect())
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "per_action": per })).expect("plain numbers serialize")
    }
}

/// `a (r×k) · b (k×c)`, row-major.
fn mat_mul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..k {
            let x = a[i * k + j];
            if x != 0.0 {
                for l in 0..c {
                    out[i * c + l] += x * b[j * c + l];
                }
            }
        }
    }
    out
}

/// The model with the follower's channel replaced by `P(a)·R(a)`.
pub fn garble(model: &PomgModel, garbling: &Garbling) -> Result<PomgModel> {
    let channels = validate_factorization(model).ok_or(Error::NotFactorizable)?;
    let d = model.dims();
    let nz = d.follower_observations;
    if garbling.observations() != nz || garbling.joint_actions() != d.joint_actions() {
        return Err(Error::InvalidParameter(format!(
            "garbling is {} actions × {}² but the model has {} joint actions and {} follower observations",
            garbling.joint_actions(),
            garbling.observations(),
            d.joint_actions(),
            nz
        )));
    }
    let ns = d.leader_states;
    let mut follower = Vec::with_capacity(channels.follower_channel().len());
    for (a, p) in channels.follower_channel().chunks(ns * nz).enumerate() {
        follower.extend(mat_mul(p, garbling.matrix(a), ns, nz, nz));
    }
    FactoredObservation::new(d, channels.leader_channel().to_vec(), follower)?.rebuild(model)
}

/// Follower values with the original channel (`v_p`) and the garbled one
/// (`v_q`), both in expected discounted cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InformationComparison {
    pub v_p: f64,
    pub v_q: f64,
    /// `v_q − v_p`: what the original information is worth to the follower.
    pub difference: f64,
    /// `v_p ≤ v_q + 2ε` at the initial statistic and at every probe.
    pub ordering_ok: bool,
    /// Largest `v_p − v_q` over the initial statistic and all vertex probes.
    pub worst_gap: f64,
    pub epsilon: f64,
}

fn probe_values(game: &Game, gamma: &GammaSet) -> Result<Vec<f64>> {
    let n = game.leader().len();
    let mut out = Vec::with_capacity(gamma.states() * n);
    for sf in 0..gamma.states() {
        for w in 0..n {
            out.push(value_at(gamma, sf, &Belief::point(Agent::Follower, n, w))?);
        }
    }
    Ok(out)
}

/// Solves the follower's problem under `leader` on `model` and on its
/// garbled copy, and checks that the better-informed follower does no worse.
pub fn compare_information(
    model: &PomgModel,
    garbling: &Garbling,
    leader: &FiniteMemoryPolicy,
    windows: &WindowOptions,
    solve: &SolveOptions,
) -> Result<InformationComparison> {
    let garbled = garble(model, garbling)?;
    let original = Game::new(model.clone(), windows)?;
    let noisy = Game::new(garbled, windows)?;
    if noisy.leader().windows() != original.leader().windows() {
        return Err(Error::InvalidParameter(
            "garbling changed the leader's reachable windows".into(),
        ));
    }
    let solve_one = |game: &Game| -> Result<(f64, Vec<f64>)> {
        let (gamma, report) = value_iteration(game, leader, solve)?;
        report.ensure_converged()?;
        Ok((follower_initial_value(game, &gamma)?, probe_values(game, &gamma)?))
    };
    let (p, q) = rayon::join(|| solve_one(&original), || solve_one(&noisy));
    let ((v_p, probes_p), (v_q, probes_q)) = (p?, q?);
    let worst_gap = probes_p
        .iter()
        .zip(&probes_q)
        .map(|(p, q)| p - q)
        .fold(v_p - v_q, f64::max);
    Ok(InformationComparison {
        v_p,
        v_q,
        difference: v_q - v_p,
        ordering_ok: worst_gap <= 2.0 * solve.epsilon,
        worst_gap,
        epsilon: solve.epsilon,
    })
}

/// `garbling,v_p,v_q,difference,ordering_ok` rows.
pub fn voi_csv(rows: &[(String, InformationComparison)]) -> String {
    let mut out = String::from("garbling,v_p,v_q,difference,ordering_ok\n");
    for (id, c) in rows {
        out.push_str(&format!(
            "{id},{:.10},{:.10},{:.10},{}\n",
            c.v_p, c.v_q, c.difference, c.ordering_ok
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_multiplies_rows() {
        let a = Garbling::new(2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let b = Garbling::new(2, vec![0.5, 0.5, 0.0, 1.0]).unwrap();
        let c = a.then(&b).unwrap();
        let expected = [0.45, 0.55, 0.1, 0.9];
        for (x, y) in c.matrix(0).iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Garbling::new(2, vec![0.9, 0.2, 0.2, 0.8]).is_err());
        assert!(Garbling::new(2, vec![1.0, 0.0, 0.5]).is_err());
        assert!(Garbling::symmetric_noise(1, 2, 1.5).is_err());
    }

    #[test]
    fn json_forms() {
        let g = Garbling::from_json(r#"{"matrix": [[0.7, 0.3], [0.4, 0.6]]}"#, 3).unwrap();
        assert_eq!(g.joint_actions(), 3);
        let back = Garbling::from_json(&g.to_json(), 3).unwrap();
        assert_eq!(back, g);
        assert!(Garbling::from_json(r#"{"matrix": [[1.0]], "per_action": [[[1.0]]]}"#, 1).is_err());
    }
}
