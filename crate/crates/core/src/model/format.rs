//! JSON model files.
//!
//! Names are declared once under `states`, `actions` and `observations`;
//! tables reference them by name and omitted sparse entries are zero.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Joint, ModelParts, PomgModel};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleNames {
    leader: Vec<String>,
    follower: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsEntry {
    s_l: String,
    s_f: String,
    a_l: String,
    a_f: String,
    #[serde(rename = "z_l'")]
    z_l_next: String,
    #[serde(rename = "z_f'")]
    z_f_next: String,
    #[serde(rename = "s_l'")]
    s_l_next: String,
    #[serde(rename = "s_f'")]
    s_f_next: String,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostEntry {
    s_l: String,
    s_f: String,
    a_l: String,
    a_f: String,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialEntry {
    s_l: String,
    s_f: String,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: RoleNames,
    actions: RoleNames,
    observations: RoleNames,
    dynamics: Vec<DynamicsEntry>,
    follower_cost: Vec<CostEntry>,
    leader_costs: Vec<Vec<CostEntry>>,
    beta: f64,
    tau: usize,
    initial: Vec<InitialEntry>,
}

struct Lookup<'a> {
    what: &'static str,
    map: HashMap<&'a str, usize>,
}

impl<'a> Lookup<'a> {
    fn new(what: &'static str, names: &'a [String]) -> Self {
        Lookup {
            what,
            map: names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect(),
        }
    }

    fn get(&self, name: &str, context: &str) -> Result<usize> {
        self.map
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown {} '{name}' in {context}", self.what)))
    }
}

struct Lookups<'a> {
    sl: Lookup<'a>,
    sf: Lookup<'a>,
    al: Lookup<'a>,
    af: Lookup<'a>,
    zl: Lookup<'a>,
    zf: Lookup<'a>,
}

impl<'a> Lookups<'a> {
    fn new(p: &'a ModelParts) -> Self {
        Lookups {
            sl: Lookup::new("leader state", &p.leader_states),
            sf: Lookup::new("follower state", &p.follower_states),
            al: Lookup::new("leader action", &p.leader_actions),
            af: Lookup::new("follower action", &p.follower_actions),
            zl: Lookup::new("leader observation", &p.leader_observations),
            zf: Lookup::new("follower observation", &p.follower_observations),
        }
    }

    fn slice(&self, s_l: &str, s_f: &str, a_l: &str, a_f: &str, ctx: &str) -> Result<(Joint, Joint)> {
        Ok((
            Joint::new(self.sl.get(s_l, ctx)?, self.sf.get(s_f, ctx)?),
            Joint::new(self.al.get(a_l, ctx)?, self.af.get(a_f, ctx)?),
        ))
    }
}

impl ModelFile {
    fn into_parts(self) -> Result<ModelParts> {
        let mut parts = ModelParts {
            leader_states: self.states.leader,
            follower_states: self.states.follower,
            leader_actions: self.actions.leader,
            follower_actions: self.actions.follower,
            leader_observations: self.observations.leader,
            follower_observations: self.observations.follower,
            dynamics: Vec::new(),
            follower_cost: Vec::new(),
            leader_costs: Vec::new(),
            beta: self.beta,
            tau: self.tau,
            initial: Vec::new(),
        };
        let d = parts.dims();
        let slices = d.slice_count();
        parts.dynamics = vec![0.0; slices * d.outcome_count()];
        parts.follower_cost = vec![0.0; slices];
        parts.leader_costs = vec![vec![0.0; slices]; self.leader_costs.len()];
        parts.initial = vec![0.0; d.joint_states()];

        let names = parts.clone();
        let look = Lookups::new(&names);
        let mut duplicates = Vec::new();

        let mut seen = vec![false; parts.dynamics.len()];
        for (n, e) in self.dynamics.iter().enumerate() {
            let ctx = format!("dynamics entry {n}");
            let (s, a) = look.slice(&e.s_l, &e.s_f, &e.a_l, &e.a_f, &ctx)?;
            let z = Joint::new(look.zl.get(&e.z_l_next, &ctx)?, look.zf.get(&e.z_f_next, &ctx)?);
            let next = Joint::new(look.sl.get(&e.s_l_next, &ctx)?, look.sf.get(&e.s_f_next, &ctx)?);
            let k = d.slice_index(s, a) * d.outcome_count() + d.outcome_index(z, next);
            if std::mem::replace(&mut seen[k], true) {
                duplicates.push(format!("{ctx} repeats an earlier entry"));
            }
            parts.dynamics[k] = e.p;
        }

        let fill = |table: &mut Vec<f64>, entries: &[CostEntry], what: &str, dup: &mut Vec<String>| -> Result<()> {
            let mut seen = vec![false; table.len()];
            for (n, e) in entries.iter().enumerate() {
                let ctx = format!("{what} entry {n}");
                let (s, a) = look.slice(&e.s_l, &e.s_f, &e.a_l, &e.a_f, &ctx)?;
                let k = d.slice_index(s, a);
                if std::mem::replace(&mut seen[k], true) {
                    dup.push(format!("{ctx} repeats an earlier entry"));
                }
                table[k] = e.c;
            }
            Ok(())
        };
        fill(&mut parts.follower_cost, &self.follower_cost, "follower_cost", &mut duplicates)?;
        for (i, entries) in self.leader_costs.iter().enumerate() {
            fill(&mut parts.leader_costs[i], entries, &format!("leader_costs[{i}]"), &mut duplicates)?;
        }

        let mut seen = vec![false; parts.initial.len()];
        for (n, e) in self.initial.iter().enumerate() {
            let ctx = format!("initial entry {n}");
            let s = Joint::new(look.sl.get(&e.s_l, &ctx)?, look.sf.get(&e.s_f, &ctx)?);
            let k = d.state_index(s);
            if std::mem::replace(&mut seen[k], true) {
                duplicates.push(format!("{ctx} repeats an earlier entry"));
            }
            parts.initial[k] = e.p;
        }

        if !duplicates.is_empty() {
            return Err(Error::Validation(duplicates));
        }
        Ok(parts)
    }

    fn from_parts(p: &ModelParts) -> Self {
        let d = p.dims();
        let cost_entries = |table: &[f64]| -> Vec<CostEntry> {
            let mut out = Vec::new();
            for s in d.states() {
                for a in d.actions() {
                    let c = table[d.slice_index(s, a)];
                    if c != 0.0 {
                        out.push(CostEntry {
                            s_l: p.leader_states[s.leader].clone(),
                            s_f: p.follower_states[s.follower].clone(),
                            a_l: p.leader_actions[a.leader].clone(),
                            a_f: p.follower_actions[a.follower].clone(),
                            c,
                        });
                    }
                }
            }
            out
        };

        let mut dynamics = Vec::new();
        for s in d.states() {
            for a in d.actions() {
                let base = d.slice_index(s, a) * d.outcome_count();
                for z in d.observations() {
                    for next in d.states() {
                        let prob = p.dynamics[base + d.outcome_index(z, next)];
                        if prob != 0.0 {
                            dynamics.push(DynamicsEntry {
                                s_l: p.leader_states[s.leader].clone(),
                                s_f: p.follower_states[s.follower].clone(),
                                a_l: p.leader_actions[a.leader].clone(),
                                a_f: p.follower_actions[a.follower].clone(),
                                z_l_next: p.leader_observations[z.leader].clone(),
                                z_f_next: p.follower_observations[z.follower].clone(),
                                s_l_next: p.leader_states[next.leader].clone(),
                                s_f_next: p.follower_states[next.follower].clone(),
                                p: prob,
                            });
                        }
                    }
                }
            }
        }

        let initial = d
            .states()
            .filter_map(|s| {
                let prob = p.initial[d.state_index(s)];
                (prob != 0.0).then(|| InitialEntry {
                    s_l: p.leader_states[s.leader].clone(),
                    s_f: p.follower_states[s.follower].clone(),
                    p: prob,
                })
            })
            .collect();

        ModelFile {
            states: RoleNames {
                leader: p.leader_states.clone(),
                follower: p.follower_states.clone(),
            },
            actions: RoleNames {
                leader: p.leader_actions.clone(),
                follower: p.follower_actions.clone(),
            },
            observations: RoleNames {
                leader: p.leader_observations.clone(),
                follower: p.follower_observations.clone(),
            },
            dynamics,
            follower_cost: cost_entries(&p.follower_cost),
            leader_costs: p.leader_costs.iter().map(|t| cost_entries(t)).collect(),
            beta: p.beta,
            tau: p.tau,
            initial,
        }
    }
}

impl PomgModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        PomgModel::new(file.into_parts()?)
    }

    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(&ModelFile::from_parts(self.parts()))
            .expect("model serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<PomgModel> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    PomgModel::from_json_str(&text)
}
