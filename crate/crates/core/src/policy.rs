//! Stationary finite-memory policies `P(a | window)`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::history::{Agent, WindowSpace};
use crate::model::PROB_TOL;

/// One probability row per window of the owning agent's window space.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMemoryPolicy {
    agent: Agent,
    n_actions: usize,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    agent: Agent,
    actions: Vec<String>,
    rows: serde_json::Map<String, serde_json::Value>,
}

impl FiniteMemoryPolicy {
    pub fn new(agent: Agent, n_actions: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut table = Vec::with_capacity(rows.len() * n_actions);
        let mut errors = Vec::new();
        for (w, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                errors.push(format!("row {w} has {} entries, expected {n_actions}", row.len()));
                continue;
            }
            check_row(w, row, &mut errors);
            table.extend_from_slice(row);
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(FiniteMemoryPolicy {
            agent,
            n_actions,
            table,
        })
    }

    /// Builds a policy from a flat row-major table without copying rows.
    pub fn from_flat(agent: Agent, n_actions: usize, table: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || !table.len().is_multiple_of(n_actions) {
            return Err(Error::LengthMismatch {
                expected: n_actions,
                actual: table.len(),
            });
        }
        let mut errors = Vec::new();
        for (w, row) in table.chunks(n_actions).enumerate() {
            check_row(w, row, &mut errors);
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(FiniteMemoryPolicy {
            agent,
            n_actions,
            table,
        })
    }

    /// Point mass on `choices[w]` in every window `w`.
    pub fn deterministic(agent: Agent, n_actions: usize, choices: &[usize]) -> Result<Self> {
        let mut table = vec![0.0; choices.len() * n_actions];
        for (w, &a) in choices.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidParameter(format!(
                    "window {w} chooses action {a} of {n_actions}"
                )));
            }
            table[w * n_actions + a] = 1.0;
        }
        Ok(FiniteMemoryPolicy {
            agent,
            n_actions,
            table,
        })
    }

    pub fn uniform(agent: Agent, n_windows: usize, n_actions: usize) -> Self {
        FiniteMemoryPolicy {
            agent,
            n_actions,
            table: vec![1.0 / n_actions as f64; n_windows * n_actions],
        }
    }

    pub fn agent(&self) -> Agent {
        self.agent
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of windows.
    pub fn len(&self) -> usize {
        self.table.len() / self.n_actions
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn row(&self, w: usize) -> &[f64] {
        &self.table[w * self.n_actions..(w + 1) * self.n_actions]
    }

    pub fn prob(&self, w: usize, a: usize) -> f64 {
        self.table[w * self.n_actions + a]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// The chosen action per window when every row is a point mass.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.len())
            .map(|w| self.row(w).iter().position(|&p| p == 1.0))
            .collect()
    }

    /// Checks that the policy fits `space`.
    pub fn check_space(&self, space: &WindowSpace) -> Result<()> {
        if self.agent != space.agent() {
            return Err(Error::InvalidParameter(format!(
                "{} policy used where a {} policy is required",
                self.agent.as_str(),
                space.agent().as_str()
            )));
        }
        if self.len() != space.len() || self.n_actions != space.n_actions() {
            return Err(Error::LengthMismatch {
                expected: space.len() * space.n_actions(),
                actual: self.table.len(),
            });
        }
        Ok(())
    }

    /// SHA-256 of the rows' IEEE-754 bytes, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.table {
            h.update(p.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Policy file text: `{"agent", "actions", "rows": {window: [p..]}}`.
    pub fn to_json(&self, space: &WindowSpace) -> Result<String> {
        self.check_space(space)?;
        let mut rows = serde_json::Map::new();
        for w in 0..self.len() {
            rows.insert(space.render(w), serde_json::json!(self.row(w)));
        }
        let file = PolicyFile {
            agent: self.agent,
            actions: space.action_names().to_vec(),
            rows,
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str, space: &WindowSpace) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.agent != space.agent() {
            return Err(Error::Parse(format!(
                "policy file is for the {}, expected the {}",
                file.agent.as_str(),
                space.agent().as_str()
            )));
        }
        if file.actions != space.action_names() {
            return Err(Error::Parse("policy action names do not match the model".into()));
        }
        let na = space.n_actions();
        let mut table = vec![f64::NAN; space.len() * na];
        let mut errors = Vec::new();
        for (key, value) in &file.rows {
            let w = space.parse(key)?;
            if !table[w * na].is_nan() {
                errors.push(format!("window '{key}' listed twice"));
                continue;
            }
            let row: Vec<f64> = serde_json::from_value(value.clone())
                .map_err(|e| Error::Parse(format!("row for '{key}': {e}")))?;
            if row.len() != na {
                errors.push(format!("row for '{key}' has {} entries, expected {na}", row.len()));
                continue;
            }
            table[w * na..(w + 1) * na].copy_from_slice(&row);
        }
        for w in 0..space.len() {
            if table[w * na].is_nan() {
                errors.push(format!("no row for window '{}'", space.render(w)));
            }
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Self::from_flat(space.agent(), na, table)
    }

    pub fn load(path: &Path, space: &WindowSpace) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, space)
    }

    pub fn save(&self, path: &Path, space: &WindowSpace) -> Result<()> {
        std::fs::write(path, self.to_json(space)?).map_err(|e| Error::io(path, e))
    }
}

fn check_row(w: usize, row: &[f64], errors: &mut Vec<String>) {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        errors.push(format!("row {w} has a negative or non-finite entry"));
        return;
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        errors.push(format!("row {w} sums to {sum}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_validated() {
        assert!(FiniteMemoryPolicy::new(Agent::Leader, 2, vec![vec![0.5, 0.5], vec![0.3, 0.6]]).is_err());
        assert!(FiniteMemoryPolicy::new(Agent::Leader, 2, vec![vec![1.0]]).is_err());
        let p = FiniteMemoryPolicy::new(Agent::Leader, 2, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.as_deterministic(), Some(vec![1, 0]));
        assert!(FiniteMemoryPolicy::deterministic(Agent::Leader, 2, &[2]).is_err());
    }

    #[test]
    fn uniform_is_not_deterministic() {
        let p = FiniteMemoryPolicy::uniform(Agent::Follower, 3, 2);
        assert_eq!(p.len(), 3);
        assert_eq!(p.as_deterministic(), None);
    }
}
