use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{Belief, Game};

/// Tolerance for treating two inner products as tied.
pub const TIE_TOL: f64 = 1e-9;

/// One linear piece of the follower's value function over leader windows.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaVector {
    pub values: Vec<f64>,
    /// Follower action whose one-step choice produced this vector.
    pub action: usize,
    /// Other actions that produced an identical vector.
    pub tied_actions: Vec<usize>,
    /// `(next follower state, next follower observation)` → index of the
    /// successor vector in the previous iterate's set for that state.
    pub provenance: BTreeMap<(usize, usize), usize>,
}

impl GammaVector {
    pub fn new(values: Vec<f64>, action: usize) -> Self {
        GammaVector {
            values,
            action,
            tied_actions: Vec::new(),
            provenance: BTreeMap::new(),
        }
    }

    pub fn dot(&self, y: &[f64]) -> f64 {
        self.values.iter().zip(y).map(|(g, p)| g * p).sum()
    }

    /// Every action tag carried by this vector, ascending.
    pub fn actions(&self) -> Vec<usize> {
        let mut out = self.tied_actions.clone();
        out.push(self.action);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Canonical order: values lexicographically, then action, then provenance.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.values.iter().zip(&other.values) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.values
            .len()
            .cmp(&other.values.len())
            .then(self.action.cmp(&other.action))
            .then_with(|| self.provenance.cmp(&other.provenance))
    }
}

/// `Γ(s^F)` for every follower state.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSet {
    sets: Vec<Vec<GammaVector>>,
}

impl GammaSet {
    pub fn new(sets: Vec<Vec<GammaVector>>) -> Self {
        GammaSet { sets }
    }

    /// One zero vector per follower state, tagged with every action so that
    /// greedy extraction from it is uniform.
    pub fn zero(n_follower_states: usize, n_leader_windows: usize, n_follower_actions: usize) -> Self {
        let v = GammaVector {
            values: vec![0.0; n_leader_windows],
            action: 0,
            tied_actions: (1..n_follower_actions).collect(),
            provenance: BTreeMap::new(),
        };
        GammaSet {
            sets: vec![vec![v]; n_follower_states],
        }
    }

    pub fn states(&self) -> usize {
        self.sets.len()
    }

    pub fn get(&self, sf: usize) -> &[GammaVector] {
        &self.sets[sf]
    }

    pub fn sets(&self) -> &[Vec<GammaVector>] {
        &self.sets
    }

    pub fn counts(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    pub fn into_sets(self) -> Vec<Vec<GammaVector>> {
        self.sets
    }

    /// Persisted form: per follower state, the list of vectors with action
    /// names, values and provenance keyed `"<s_f'>/<z_f'>"`.
    pub fn to_json(&self, game: &Game) -> Result<String> {
        let p = game.model().parts();
        let file = GammaFile {
            follower_states: p.follower_states.clone(),
            follower_actions: p.follower_actions.clone(),
            leader_windows: (0..game.leader().len()).map(|i| game.leader().render(i)).collect(),
            sets: self
                .sets
                .iter()
                .enumerate()
                .map(|(sf, vs)| StateEntry {
                    state: p.follower_states[sf].clone(),
                    vectors: vs
                        .iter()
                        .map(|v| VectorEntry {
                            action: p.follower_actions[v.action].clone(),
                            tied_actions: v.tied_actions.iter().map(|&a| p.follower_actions[a].clone()).collect(),
                            values: v.values.clone(),
                            provenance: v
                                .provenance
                                .iter()
                                .map(|(&(s, z), &i)| {
                                    (format!("{}/{}", p.follower_states[s], p.follower_observations[z]), i)
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str, game: &Game) -> Result<Self> {
        let file: GammaFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let p = game.model().parts();
        if file.follower_states != p.follower_states || file.follower_actions != p.follower_actions {
            return Err(Error::Parse("gamma file names do not match the model".into()));
        }
        let n = game.leader().len();
        if file.leader_windows.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: file.leader_windows.len(),
            });
        }
        for (i, w) in file.leader_windows.iter().enumerate() {
            if game.leader().parse(w)? != i {
                return Err(Error::Parse(format!("leader window '{w}' is out of canonical order")));
            }
        }
        let action = |name: &str| {
            p.follower_actions
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::Parse(format!("unknown follower action '{name}'")))
        };
        let mut sets = Vec::with_capacity(file.sets.len());
        for entry in &file.sets {
            let mut vs = Vec::with_capacity(entry.vectors.len());
            for v in &entry.vectors {
                if v.values.len() != n || v.values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parse(format!("bad gamma vector for state '{}'", entry.state)));
                }
                let mut provenance = BTreeMap::new();
                for (key, &i) in &v.provenance {
                    let (s, z) = key
                        .split_once('/')
                        .ok_or_else(|| Error::Parse(format!("bad provenance key '{key}'")))?;
                    let s = p.follower_states.iter().position(|x| x == s);
                    let z = p.follower_observations.iter().position(|x| x == z);
                    match (s, z) {
                        (Some(s), Some(z)) => provenance.insert((s, z), i),
                        _ => return Err(Error::Parse(format!("bad provenance key '{key}'"))),
                    };
                }
                vs.push(GammaVector {
                    values: v.values.clone(),
                    action: action(&v.action)?,
                    tied_actions: v.tied_actions.iter().map(|a| action(a)).collect::<Result<_>>()?,
                    provenance,
                });
            }
            sets.push(vs);
        }
        if sets.len() != p.follower_states.len() {
            return Err(Error::LengthMismatch {
                expected: p.follower_states.len(),
                actual: sets.len(),
            });
        }
        Ok(GammaSet { sets })
    }

    pub fn load(path: &Path, game: &Game) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, game)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaFile {
    follower_states: Vec<String>,
    follower_actions: Vec<String>,
    leader_windows: Vec<String>,
    sets: Vec<StateEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateEntry {
    state: String,
    vectors: Vec<VectorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorEntry {
    action: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tied_actions: Vec<String>,
    values: Vec<f64>,
    provenance: BTreeMap<String, usize>,
}

fn nonempty(gamma: &GammaSet, sf: usize) -> Result<&[GammaVector]> {
    match gamma.sets.get(sf) {
        Some(vs) if !vs.is_empty() => Ok(vs),
        _ => Err(Error::EmptyGammaSet { state: sf }),
    }
}

/// `min_γ γ·y` over `Γ(s^F)`.
pub fn value_at(gamma: &GammaSet, sf: usize, y: &Belief) -> Result<f64> {
    let vs = nonempty(gamma, sf)?;
    Ok(vs.iter().map(|v| v.dot(y.weights())).fold(f64::INFINITY, f64::min))
}

/// Greedy action distribution at `(s^F, y)`: uniform over the action tags of
/// every vector within [`TIE_TOL`] of the minimum.
pub fn extract_action(gamma: &GammaSet, sf: usize, y: &Belief, n_actions: usize) -> Result<Vec<f64>> {
    let vs = nonempty(gamma, sf)?;
    let dots: Vec<f64> = vs.iter().map(|v| v.dot(y.weights())).collect();
    let best = dots.iter().copied().fold(f64::INFINITY, f64::min);
    let mut tied = vec![false; n_actions];
    for (v, d) in vs.iter().zip(&dots) {
        if *d <= best + TIE_TOL {
            for a in v.actions() {
                tied[a] = true;
            }
        }
    }
    let k = tied.iter().filter(|t| **t).count() as f64;
    Ok(tied.iter().map(|&t| if t { 1.0 / k } else { 0.0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::Agent;

    fn set(vs: Vec<GammaVector>) -> GammaSet {
        GammaSet::new(vec![vs])
    }

    fn belief(w: &[f64]) -> Belief {
        Belief::new(Agent::Follower, w.to_vec()).unwrap()
    }

    #[test]
    fn single_inner_product() {
        let g = set(vec![GammaVector::new(vec![1.0, 3.0], 0)]);
        assert_eq!(value_at(&g, 0, &belief(&[0.5, 0.5])).unwrap(), 2.0);
    }

    #[test]
    fn symmetric_envelope() {
        let g = set(vec![GammaVector::new(vec![0.0, 2.0], 0), GammaVector::new(vec![2.0, 0.0], 1)]);
        assert_eq!(value_at(&g, 0, &belief(&[0.5, 0.5])).unwrap(), 1.0);
        assert_eq!(extract_action(&g, 0, &belief(&[0.5, 0.5]), 2).unwrap(), vec![0.5, 0.5]);
        assert_eq!(extract_action(&g, 0, &belief(&[0.9, 0.1]), 2).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn unique_minimizer_is_point_mass() {
        let g = set(vec![GammaVector::new(vec![1.0, 1.0], 0), GammaVector::new(vec![0.5, 0.5], 2)]);
        assert_eq!(extract_action(&g, 0, &belief(&[0.3, 0.7]), 3).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_set_errors() {
        let g = set(vec![]);
        assert!(matches!(value_at(&g, 0, &belief(&[1.0])), Err(Error::EmptyGammaSet { state: 0 })));
        assert!(extract_action(&g, 1, &belief(&[1.0]), 1).is_err());
    }

    #[test]
    fn zero_set_extracts_uniform() {
        let g = GammaSet::zero(1, 2, 4);
        assert_eq!(extract_action(&g, 0, &belief(&[0.5, 0.5]), 4).unwrap(), vec![0.25; 4]);
    }
}
