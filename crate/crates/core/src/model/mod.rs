//! The two-agent partially observed Markov game.
//!
//! A [`PomgModel`] holds the finite state, action and observation sets of the
//! leader and the follower, the joint kernel `P(z', s' | s, a)`, the follower
//! cost, one cost table per leader criterion, the discount factor, the memory
//! length shared by both agents' policies and the initial joint-state
//! distribution. All tables are dense and indexed by declaration order of the
//! names in the model file.

mod factor;
mod format;

pub use factor::{validate_factorization, FactoredObservation};
pub use format::load_model;

use crate::error::{Error, Result};

/// Probability mass tolerance used by every model invariant.
pub const PROB_TOL: f64 = 1e-9;

/// A leader/follower pair of indices (states, actions or observations).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Joint {
    pub leader: usize,
    pub follower: usize,
}

impl Joint {
    pub const fn new(leader: usize, follower: usize) -> Self {
        Joint { leader, follower }
    }
}

/// Cardinalities of the six index sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub leader_states: usize,
    pub follower_states: usize,
    pub leader_actions: usize,
    pub follower_actions: usize,
    pub leader_observations: usize,
    pub follower_observations: usize,
}

impl Dims {
    pub fn joint_states(&self) -> usize {
        self.leader_states * self.follower_states
    }

    pub fn joint_actions(&self) -> usize {
        self.leader_actions * self.follower_actions
    }

    /// Flat index of a (state, action) slice.
    pub fn slice_index(&self, s: Joint, a: Joint) -> usize {
        ((s.leader * self.follower_states + s.follower) * self.leader_actions + a.leader)
            * self.follower_actions
            + a.follower
    }

    pub fn slice_count(&self) -> usize {
        self.joint_states() * self.joint_actions()
    }

    /// Number of `(z', s')` outcomes per slice.
    pub fn outcome_count(&self) -> usize {
        self.leader_observations * self.follower_observations * self.joint_states()
    }

    pub fn outcome_index(&self, z: Joint, next: Joint) -> usize {
        ((z.leader * self.follower_observations + z.follower) * self.leader_states + next.leader)
            * self.follower_states
            + next.follower
    }

    pub fn state_index(&self, s: Joint) -> usize {
        s.leader * self.follower_states + s.follower
    }

    pub fn action_index(&self, a: Joint) -> usize {
        a.leader * self.follower_actions + a.follower
    }

    pub fn states(&self) -> impl Iterator<Item = Joint> + '_ {
        let nf = self.follower_states;
        (0..self.joint_states()).map(move |k| Joint::new(k / nf, k % nf))
    }

    pub fn actions(&self) -> impl Iterator<Item = Joint> + '_ {
        let nf = self.follower_actions;
        (0..self.joint_actions()).map(move |k| Joint::new(k / nf, k % nf))
    }

    pub fn observations(&self) -> impl Iterator<Item = Joint> + '_ {
        let nf = self.follower_observations;
        let n = self.leader_observations * nf;
        (0..n).map(move |k| Joint::new(k / nf, k % nf))
    }
}

/// One positive-probability transition `(z', s')` of a dynamics slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub observation: Joint,
    pub next: Joint,
    pub p: f64,
}

/// Raw, unvalidated model contents. Used by builders and the file loader.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParts {
    pub leader_states: Vec<String>,
    pub follower_states: Vec<String>,
    pub leader_actions: Vec<String>,
    pub follower_actions: Vec<String>,
    pub leader_observations: Vec<String>,
    pub follower_observations: Vec<String>,
    /// Dense `[slice][outcome]` table, see [`Dims::slice_index`] and [`Dims::outcome_index`].
    pub dynamics: Vec<f64>,
    /// Dense `[slice]` table.
    pub follower_cost: Vec<f64>,
    /// One dense `[slice]` table per leader criterion.
    pub leader_costs: Vec<Vec<f64>>,
    pub beta: f64,
    pub tau: usize,
    /// Dense `[joint state]` table.
    pub initial: Vec<f64>,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl ModelParts {
    /// Zero-filled parts with generated names (`sl0`, `sf0`, `al0`, ...).
    pub fn with_dims(dims: Dims, criteria: usize, beta: f64, tau: usize) -> Self {
        let slices = dims.slice_count();
        ModelParts {
            leader_states: names("sl", dims.leader_states),
            follower_states: names("sf", dims.follower_states),
            leader_actions: names("al", dims.leader_actions),
            follower_actions: names("af", dims.follower_actions),
            leader_observations: names("zl", dims.leader_observations),
            follower_observations: names("zf", dims.follower_observations),
            dynamics: vec![0.0; slices * dims.outcome_count()],
            follower_cost: vec![0.0; slices],
            leader_costs: vec![vec![0.0; slices]; criteria],
            beta,
            tau,
            initial: vec![0.0; dims.joint_states()],
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            leader_states: self.leader_states.len(),
            follower_states: self.follower_states.len(),
            leader_actions: self.leader_actions.len(),
            follower_actions: self.follower_actions.len(),
            leader_observations: self.leader_observations.len(),
            follower_observations: self.follower_observations.len(),
        }
    }

    pub fn set_prob(&mut self, s: Joint, a: Joint, z: Joint, next: Joint, p: f64) {
        let d = self.dims();
        let k = d.slice_index(s, a) * d.outcome_count() + d.outcome_index(z, next);
        self.dynamics[k] = p;
    }

    pub fn add_prob(&mut self, s: Joint, a: Joint, z: Joint, next: Joint, p: f64) {
        let d = self.dims();
        let k = d.slice_index(s, a) * d.outcome_count() + d.outcome_index(z, next);
        self.dynamics[k] += p;
    }

    pub fn set_follower_cost(&mut self, s: Joint, a: Joint, c: f64) {
        let k = self.dims().slice_index(s, a);
        self.follower_cost[k] = c;
    }

    pub fn set_leader_cost(&mut self, criterion: usize, s: Joint, a: Joint, c: f64) {
        let k = self.dims().slice_index(s, a);
        self.leader_costs[criterion][k] = c;
    }

    pub fn set_initial(&mut self, s: Joint, p: f64) {
        let k = self.dims().state_index(s);
        self.initial[k] = p;
    }

    fn slice_label(&self, s: Joint, a: Joint) -> String {
        format!(
            "(s_l={}, s_f={}, a_l={}, a_f={})",
            self.leader_states[s.leader],
            self.follower_states[s.follower],
            self.leader_actions[a.leader],
            self.follower_actions[a.follower]
        )
    }

    /// Every violated invariant, with index coordinates. Empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sets = [
            ("leader states", &self.leader_states),
            ("follower states", &self.follower_states),
            ("leader actions", &self.leader_actions),
            ("follower actions", &self.follower_actions),
            ("leader observations", &self.leader_observations),
            ("follower observations", &self.follower_observations),
        ];
        for (what, list) in sets {
            if list.is_empty() {
                out.push(format!("{what} must be nonempty"));
            }
            let mut seen = std::collections::HashSet::new();
            for name in list.iter() {
                if !seen.insert(name.as_str()) {
                    out.push(format!("{what}: duplicate name '{name}'"));
                }
                // Window labels use '|' and ',' as separators and '-' for
                // slots before the first epoch.
                if name.is_empty() || name == "-" || name.contains(['|', ',', ':']) || name.trim() != name {
                    out.push(format!("{what}: name '{name}' is empty, '-', padded or contains '|', ',' or ':'"));
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        if !(0.0..1.0).contains(&self.beta) {
            out.push(format!("beta = {} must lie in [0, 1)", self.beta));
        }
        if self.tau == 0 {
            out.push("tau must be at least 1".to_string());
        }
        if self.leader_costs.is_empty() {
            out.push("at least one leader criterion is required".to_string());
        }

        let d = self.dims();
        let slices = d.slice_count();
        let outcomes = d.outcome_count();
        if self.dynamics.len() != slices * outcomes {
            out.push(format!(
                "dynamics table has {} entries, expected {}",
                self.dynamics.len(),
                slices * outcomes
            ));
            return out;
        }
        for s in d.states() {
            for a in d.actions() {
                let k = d.slice_index(s, a);
                let row = &self.dynamics[k * outcomes..(k + 1) * outcomes];
                if let Some(bad) = row.iter().position(|p| !p.is_finite() || *p < 0.0) {
                    out.push(format!(
                        "dynamics slice {} has invalid probability {} at outcome {bad}",
                        self.slice_label(s, a),
                        row[bad]
                    ));
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    out.push(format!(
                        "dynamics slice {} sums to {sum}",
                        self.slice_label(s, a)
                    ));
                }
            }
        }

        let mut cost_tables = vec![("follower cost".to_string(), &self.follower_cost)];
        for (i, table) in self.leader_costs.iter().enumerate() {
            cost_tables.push((format!("leader cost {i}"), table));
        }
        for (what, table) in cost_tables {
            if table.len() != slices {
                out.push(format!("{what} has {} entries, expected {slices}", table.len()));
                continue;
            }
            for s in d.states() {
                for a in d.actions() {
                    let c = table[d.slice_index(s, a)];
                    if !c.is_finite() {
                        out.push(format!("{what} at {} is not finite", self.slice_label(s, a)));
                    }
                }
            }
        }

        if self.initial.len() != d.joint_states() {
            out.push(format!(
                "initial distribution has {} entries, expected {}",
                self.initial.len(),
                d.joint_states()
            ));
        } else {
            for s in d.states() {
                let p = self.initial[d.state_index(s)];
                if !p.is_finite() || p < 0.0 {
                    out.push(format!(
                        "initial probability of (s_l={}, s_f={}) is {p}",
                        self.leader_states[s.leader], self.follower_states[s.follower]
                    ));
                }
            }
            let sum: f64 = self.initial.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(format!("initial distribution sums to {sum}"));
            }
        }
        out
    }
}

/// A validated game. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct PomgModel {
    parts: ModelParts,
    dims: Dims,
    outcomes: Vec<Vec<Outcome>>,
    transitions: Vec<f64>,
}

impl PomgModel {
    pub fn new(parts: ModelParts) -> Result<Self> {
        let violations = parts.violations();
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let dims = parts.dims();
        let n_out = dims.outcome_count();
        let n_states = dims.joint_states();
        let mut outcomes = Vec::with_capacity(dims.slice_count());
        let mut transitions = vec![0.0; dims.slice_count() * n_states];
        for k in 0..dims.slice_count() {
            let row = &parts.dynamics[k * n_out..(k + 1) * n_out];
            let mut list = Vec::new();
            for z in dims.observations() {
                for next in dims.states() {
                    let p = row[dims.outcome_index(z, next)];
                    if p > 0.0 {
                        list.push(Outcome {
                            observation: z,
                            next,
                            p,
                        });
                        transitions[k * n_states + dims.state_index(next)] += p;
                    }
                }
            }
            outcomes.push(list);
        }
        Ok(PomgModel {
            parts,
            dims,
            outcomes,
            transitions,
        })
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn beta(&self) -> f64 {
        self.parts.beta
    }

    pub fn tau(&self) -> usize {
        self.parts.tau
    }

    pub fn criteria(&self) -> usize {
        self.parts.leader_costs.len()
    }

    /// Positive-probability outcomes of the slice `(s, a)`.
    pub fn outcomes(&self, s: Joint, a: Joint) -> &[Outcome] {
        &self.outcomes[self.dims.slice_index(s, a)]
    }

    pub fn prob(&self, s: Joint, a: Joint, z: Joint, next: Joint) -> f64 {
        let d = &self.dims;
        self.parts.dynamics[d.slice_index(s, a) * d.outcome_count() + d.outcome_index(z, next)]
    }

    /// State transition probability `P(s' | s, a)`, marginalized over observations.
    pub fn transition(&self, s: Joint, a: Joint, next: Joint) -> f64 {
        let d = &self.dims;
        self.transitions[d.slice_index(s, a) * d.joint_states() + d.state_index(next)]
    }

    pub fn follower_cost(&self, s: Joint, a: Joint) -> f64 {
        self.parts.follower_cost[self.dims.slice_index(s, a)]
    }

    pub fn leader_cost(&self, criterion: usize, s: Joint, a: Joint) -> f64 {
        self.parts.leader_costs[criterion][self.dims.slice_index(s, a)]
    }

    pub fn initial(&self, s: Joint) -> f64 {
        self.parts.initial[self.dims.state_index(s)]
    }

    /// Marginal initial probability of each leader state.
    pub fn initial_leader_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dims.leader_states];
        for s in self.dims.states() {
            m[s.leader] += self.initial(s);
        }
        m
    }

    /// Marginal initial probability of each follower state.
    pub fn initial_follower_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dims.follower_states];
        for s in self.dims.states() {
            m[s.follower] += self.initial(s);
        }
        m
    }

    pub fn leader_state_name(&self, i: usize) -> &str {
        &self.parts.leader_states[i]
    }

    pub fn follower_state_name(&self, i: usize) -> &str {
        &self.parts.follower_states[i]
    }

    pub fn leader_action_name(&self, i: usize) -> &str {
        &self.parts.leader_actions[i]
    }

    pub fn follower_action_name(&self, i: usize) -> &str {
        &self.parts.follower_actions[i]
    }

    /// Largest absolute single-period cost over the follower and all leader criteria.
    pub fn max_abs_cost(&self) -> f64 {
        self.parts
            .leader_costs
            .iter()
            .chain(std::iter::once(&self.parts.follower_cost))
            .flat_map(|t| t.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singleton() -> ModelParts {
        let dims = Dims {
            leader_states: 1,
            follower_states: 1,
            leader_actions: 1,
            follower_actions: 1,
            leader_observations: 1,
            follower_observations: 1,
        };
        let mut parts = ModelParts::with_dims(dims, 1, 0.5, 1);
        let o = Joint::new(0, 0);
        parts.set_prob(o, o, o, o, 1.0);
        parts.set_initial(o, 1.0);
        parts
    }

    #[test]
    fn singleton_is_valid() {
        let m = PomgModel::new(singleton()).unwrap();
        assert_eq!(m.outcomes(Joint::new(0, 0), Joint::new(0, 0)).len(), 1);
        assert_eq!(m.transition(Joint::new(0, 0), Joint::new(0, 0), Joint::new(0, 0)), 1.0);
    }

    #[test]
    fn short_slice_is_named() {
        let mut parts = singleton();
        parts.dynamics[0] = 0.98;
        let err = PomgModel::new(parts).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(s_l=sl0, s_f=sf0, a_l=al0, a_f=af0) sums to 0.98"), "{msg}");
    }

    #[test]
    fn rejects_bad_scalars() {
        let mut parts = singleton();
        parts.beta = 1.0;
        parts.tau = 0;
        parts.leader_costs.clear();
        parts.initial[0] = 0.5;
        let Err(Error::Validation(v)) = PomgModel::new(parts) else {
            panic!("expected validation error");
        };
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn rejects_duplicate_names() {
        let mut parts = singleton();
        parts.leader_actions = vec!["x".into(), "x".into()];
        assert!(matches!(PomgModel::new(parts), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_separator_names() {
        for bad in ["-", "a|b", "a,b", "", "z:1"] {
            let mut parts = singleton();
            parts.follower_states = vec![bad.into()];
            assert!(matches!(PomgModel::new(parts), Err(Error::Validation(_))), "{bad:?}");
        }
    }
}
