use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::history::Agent;
use crate::model::PROB_TOL;
use crate::policy::FiniteMemoryPolicy;

/// Encoding of the leader's policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One probability vector over actions per window.
    Stochastic,
    /// One action index per window.
    #[default]
    Deterministic,
}

/// A chromosome's genes, one block per leader window.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genes {
    /// Row-major `[window][action]` probabilities.
    Stochastic(Vec<f64>),
    Deterministic(Vec<usize>),
}

impl PartialEq for Genes {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Genes::Stochastic(a), Genes::Stochastic(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Genes::Deterministic(a), Genes::Deterministic(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Genes {}

impl Hash for Genes {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Genes::Stochastic(v) => {
                0u8.hash(state);
                for x in v {
                    x.to_bits().hash(state);
                }
            }
            Genes::Deterministic(v) => {
                1u8.hash(state);
                v.hash(state);
            }
        }
    }
}

/// Shape of the gene string: `windows` blocks over `actions` actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub windows: usize,
    pub actions: usize,
}

fn dirichlet_block<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

impl Genes {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, layout: Layout, mode: Mode) -> Self {
        match mode {
            Mode::Deterministic => {
                Genes::Deterministic((0..layout.windows).map(|_| rng.random_range(0..layout.actions)).collect())
            }
            Mode::Stochastic => {
                Genes::Stochastic((0..layout.windows).flat_map(|_| dirichlet_block(rng, layout.actions)).collect())
            }
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Genes::Stochastic(_) => Mode::Stochastic,
            Genes::Deterministic(_) => Mode::Deterministic,
        }
    }

    pub fn blocks(&self, layout: Layout) -> usize {
        match self {
            Genes::Stochastic(v) => v.len() / layout.actions,
            Genes::Deterministic(v) => v.len(),
        }
    }

    /// Checks the simplex or index constraint of every block.
    pub fn check(&self, layout: Layout) -> Result<()> {
        match self {
            Genes::Deterministic(v) => {
                if v.len() != layout.windows {
                    return Err(Error::LengthMismatch {
                        expected: layout.windows,
                        actual: v.len(),
                    });
                }
                if let Some(a) = v.iter().find(|&&a| a >= layout.actions) {
                    return Err(Error::InvalidParameter(format!("gene action {a} out of range")));
                }
            }
            Genes::Stochastic(v) => {
                if v.len() != layout.windows * layout.actions {
                    return Err(Error::LengthMismatch {
                        expected: layout.windows * layout.actions,
                        actual: v.len(),
                    });
                }
                for (w, block) in v.chunks(layout.actions).enumerate() {
                    let sum: f64 = block.iter().sum();
                    if block.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidParameter(format!("gene block {w} is not a distribution")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Swaps the tails after block `cut` between two gene strings.
    pub fn crossover(&self, other: &Genes, cut: usize, layout: Layout) -> (Genes, Genes) {
        match (self, other) {
            (Genes::Deterministic(a), Genes::Deterministic(b)) => {
                let mut c1 = a[..cut].to_vec();
                c1.extend_from_slice(&b[cut..]);
                let mut c2 = b[..cut].to_vec();
                c2.extend_from_slice(&a[cut..]);
                (Genes::Deterministic(c1), Genes::Deterministic(c2))
            }
            (Genes::Stochastic(a), Genes::Stochastic(b)) => {
                let k = cut * layout.actions;
                let mut c1 = a[..k].to_vec();
                c1.extend_from_slice(&b[k..]);
                let mut c2 = b[..k].to_vec();
                c2.extend_from_slice(&a[k..]);
                (Genes::Stochastic(c1), Genes::Stochastic(c2))
            }
            _ => panic!("crossover between different gene modes"),
        }
    }

    /// Resamples block `w`.
    pub fn resample_block<R: Rng + ?Sized>(&mut self, rng: &mut R, w: usize, layout: Layout) {
        match self {
            Genes::Deterministic(v) => v[w] = rng.random_range(0..layout.actions),
            Genes::Stochastic(v) => {
                let block = dirichlet_block(rng, layout.actions);
                v[w * layout.actions..(w + 1) * layout.actions].copy_from_slice(&block);
            }
        }
    }

    pub fn to_policy(&self, layout: Layout) -> Result<FiniteMemoryPolicy> {
        match self {
            Genes::Deterministic(v) => FiniteMemoryPolicy::deterministic(Agent::Leader, layout.actions, v),
            Genes::Stochastic(v) => FiniteMemoryPolicy::from_flat(Agent::Leader, layout.actions, v.clone()),
        }
    }

    pub fn from_policy(policy: &FiniteMemoryPolicy, mode: Mode) -> Genes {
        match (mode, policy.as_deterministic()) {
            (Mode::Deterministic, Some(choices)) => Genes::Deterministic(choices),
            _ => Genes::Stochastic(policy.table().to_vec()),
        }
    }

    /// SHA-256 over a canonical byte encoding, hex encoded.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        match self {
            Genes::Deterministic(v) => {
                h.update([1u8]);
                for a in v {
                    h.update((*a as u64).to_le_bytes());
                }
            }
            Genes::Stochastic(v) => {
                h.update([0u8]);
                for p in v {
                    h.update(p.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}
