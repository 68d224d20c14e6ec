//! The attacker/defender food-processing scenario.
//!
//! The defender (leader) runs a facility in full production (`FP`), a
//! low-production high-alert mode (`LP`), an attack-response mode entered on
//! detection (`Att`), or shut down (`SD`). Each period it may continue or
//! order a shutdown, which takes effect at the next epoch and is absorbing.
//! The attacker (follower) moves along `O ↔ PT_i ↔ T_i` for two targets by
//! holding, advancing or retreating; interdiction by the defender or its own
//! error sends it back to `O`. While the attacker sits at a target and the
//! facility produces, contaminated packages leave the plant unless the attack
//! is detected.
//!
//! Leader criterion 0 is negated productivity, criterion 1 is vulnerability
//! (expected lethal packages per period). The attacker's cost is the negated
//! vulnerability plus a small effort cost for moving.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{Agent, Game};
use crate::model::{Joint, ModelParts, PomgModel, PROB_TOL};
use crate::policy::FiniteMemoryPolicy;

pub const FP: usize = 0;
pub const LP: usize = 1;
pub const ATT: usize = 2;
pub const SD: usize = 3;
pub const CONTINUE: usize = 0;
pub const SHUTDOWN: usize = 1;
pub const O: usize = 0;
pub const HOLD: usize = 0;
pub const ADVANCE: usize = 1;
pub const RETREAT: usize = 2;

const TARGETS: usize = 2;

fn pt(i: usize) -> usize {
    1 + i
}

fn t(i: usize) -> usize {
    1 + TARGETS + i
}

fn target_of(sf: usize) -> Option<usize> {
    (sf > TARGETS).then(|| sf - TARGETS - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerParams {
    /// Initial distribution over `[O, PT1, PT2, T1, T2]`.
    pub initial: [f64; 5],
    /// Which target an advance from `O` heads for.
    pub target_choice: [f64; TARGETS],
    pub advance_success: f64,
    pub retreat_success: f64,
    /// Per-period chance of a blunder that returns the attacker to `O`.
    pub error: f64,
    /// Per-period chance of interdiction by defender state `[FP, LP, Att, SD]`.
    pub interdiction: [f64; 4],
    /// Cost per period of advancing or retreating.
    pub effort: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderParams {
    pub fp_to_lp: f64,
    pub lp_to_fp: f64,
    /// Chance per period that an attack in progress is detected, in `[FP, LP]`.
    pub detection: [f64; 2],
    /// Chance per period of leaving `Att` for `FP` when continuing.
    pub recovery: f64,
    /// Production rate in `[FP, LP, Att]`.
    pub productivity: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackParams {
    /// Chance per period that an attack at target `i` doses product.
    pub success: [f64; TARGETS],
    /// Expected lethal packages per unit production from a successful dose.
    pub lethal_packages: [f64; TARGETS],
    /// Fraction of exposure that remains while responding in `Att`.
    pub att_exposure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationParams {
    /// Chance the attacker's calm/alert reading is wrong.
    pub follower_noise: f64,
    /// When set, the defender gets a quiet/suspicious sensor on the attacker
    /// with this error rate; otherwise it observes nothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_noise: Option<f64>,
}

/// Tunable inputs of [`build_model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub version: u32,
    pub beta: f64,
    pub tau: usize,
    pub attacker: AttackerParams,
    pub defender: DefenderParams,
    pub attack: AttackParams,
    pub observation: ObservationParams,
}

impl Default for ScenarioParams {
    /// Desk parameters: our own illustrative numbers.
    fn default() -> Self {
        ScenarioParams {
            version: 1,
            beta: 0.9,
            tau: 1,
            attacker: AttackerParams {
                initial: [0.7, 0.1, 0.1, 0.05, 0.05],
                target_choice: [0.5, 0.5],
                advance_success: 0.6,
                retreat_success: 0.9,
                error: 0.05,
                interdiction: [0.05, 0.3, 0.8, 0.0],
                effort: 0.01,
            },
            defender: DefenderParams {
                fp_to_lp: 0.1,
                lp_to_fp: 0.3,
                detection: [0.1, 0.5],
                recovery: 0.5,
                productivity: [1.0, 0.6, 0.2],
            },
            attack: AttackParams {
                success: [0.6, 0.4],
                lethal_packages: [10.0, 6.0],
                att_exposure: 0.5,
            },
            observation: ObservationParams {
                follower_noise: 0.2,
                leader_noise: None,
            },
        }
    }
}

fn prob(name: &str, p: f64, out: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&p) {
        out.push(format!("{name} = {p} is not a probability"));
    }
}

impl ScenarioParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let a = &self.attacker;
        let d = &self.defender;
        for (i, p) in a.initial.iter().enumerate() {
            prob(&format!("attacker.initial[{i}]"), *p, &mut out);
        }
        for (name, v) in [("attacker.initial", a.initial.as_slice()), ("attacker.target_choice", &a.target_choice)] {
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(format!("{name} sums to {sum}"));
            }
        }
        for (i, p) in a.target_choice.iter().enumerate() {
            prob(&format!("attacker.target_choice[{i}]"), *p, &mut out);
        }
        prob("attacker.advance_success", a.advance_success, &mut out);
        prob("attacker.retreat_success", a.retreat_success, &mut out);
        prob("attacker.error", a.error, &mut out);
        for (i, p) in a.interdiction.iter().enumerate() {
            prob(&format!("attacker.interdiction[{i}]"), *p, &mut out);
        }
        prob("defender.fp_to_lp", d.fp_to_lp, &mut out);
        prob("defender.lp_to_fp", d.lp_to_fp, &mut out);
        prob("defender.recovery", d.recovery, &mut out);
        for (i, p) in d.detection.iter().enumerate() {
            prob(&format!("defender.detection[{i}]"), *p, &mut out);
        }
        for (i, p) in self.attack.success.iter().enumerate() {
            prob(&format!("attack.success[{i}]"), *p, &mut out);
        }
        prob("attack.att_exposure", self.attack.att_exposure, &mut out);
        prob("observation.follower_noise", self.observation.follower_noise, &mut out);
        if let Some(n) = self.observation.leader_noise {
            prob("observation.leader_noise", n, &mut out);
        }
        let costs = d
            .productivity
            .iter()
            .chain(&self.attack.lethal_packages)
            .chain(std::iter::once(&a.effort));
        if costs.clone().any(|c| !c.is_finite() || *c < 0.0) {
            out.push("productivity, lethal package counts and effort must be finite and nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.beta) {
            out.push(format!("beta = {} must lie in [0, 1)", self.beta));
        }
        if self.tau == 0 {
            out.push("tau must be at least 1".into());
        }
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario parameters serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Attacker's next-state distribution.
fn attacker_step(p: &ScenarioParams, sl: usize, sf: usize, af: usize) -> [f64; 5] {
    let a = &p.attacker;
    let mut out = [0.0; 5];
    let free = if sf == O {
        1.0
    } else {
        let stay_free = (1.0 - a.interdiction[sl]) * (1.0 - a.error);
        out[O] += 1.0 - stay_free;
        stay_free
    };
    match (target_of(sf), sf, af) {
        (_, O, ADVANCE) => {
            for (i, c) in a.target_choice.iter().enumerate() {
                out[pt(i)] += free * a.advance_success * c;
            }
            out[O] += free * (1.0 - a.advance_success);
        }
        (None, s, ADVANCE) => {
            let i = s - 1;
            out[t(i)] += free * a.advance_success;
            out[s] += free * (1.0 - a.advance_success);
        }
        (None, s, RETREAT) if s != O => {
            out[O] += free * a.retreat_success;
            out[s] += free * (1.0 - a.retreat_success);
        }
        (Some(i), s, RETREAT) => {
            out[pt(i)] += free * a.retreat_success;
            out[s] += free * (1.0 - a.retreat_success);
        }
        (_, s, _) => out[s] += free,
    }
    out
}

/// Defender's next-state distribution.
fn defender_step(p: &ScenarioParams, sl: usize, sf: usize, al: usize) -> [f64; 4] {
    let d = &p.defender;
    let mut out = [0.0; 4];
    if al == SHUTDOWN || sl == SD {
        out[SD] = 1.0;
        return out;
    }
    let attacking = target_of(sf).is_some();
    match sl {
        FP | LP => {
            let det = if attacking { d.detection[sl] } else { 0.0 };
            out[ATT] += det;
            let (stay, other, switch) = if sl == FP { (FP, LP, d.fp_to_lp) } else { (LP, FP, d.lp_to_fp) };
            out[other] += (1.0 - det) * switch;
            out[stay] += (1.0 - det) * (1.0 - switch);
        }
        _ => {
            out[FP] += d.recovery;
            out[ATT] += 1.0 - d.recovery;
        }
    }
    out
}

/// Expected lethal packages produced this period.
pub fn vulnerability(p: &ScenarioParams, sl: usize, sf: usize) -> f64 {
    let Some(i) = target_of(sf) else { return 0.0 };
    let dose = p.attack.success[i] * p.attack.lethal_packages[i];
    let prod = p.defender.productivity;
    match sl {
        FP | LP => prod[sl] * (1.0 - p.defender.detection[sl]) * dose,
        ATT => prod[ATT] * p.attack.att_exposure * dose,
        _ => 0.0,
    }
}

fn productivity(p: &ScenarioParams, sl: usize) -> f64 {
    if sl == SD {
        0.0
    } else {
        p.defender.productivity[sl]
    }
}

/// Builds the scenario game. A shutdown order takes effect at the next epoch,
/// so the ordering period still produces (and is still exposed).
pub fn build_model(params: &ScenarioParams) -> Result<PomgModel> {
    let v = params.violations();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let leader_obs = match params.observation.leader_noise {
        Some(_) => names(&["quiet", "suspicious"]),
        None => names(&["none"]),
    };
    let mut parts = ModelParts {
        leader_states: names(&["FP", "LP", "Att", "SD"]),
        follower_states: names(&["O", "PT1", "PT2", "T1", "T2"]),
        leader_actions: names(&["continue", "shutdown"]),
        follower_actions: names(&["hold", "advance", "retreat"]),
        leader_observations: leader_obs,
        follower_observations: names(&["calm", "alert"]),
        dynamics: Vec::new(),
        follower_cost: Vec::new(),
        leader_costs: Vec::new(),
        beta: params.beta,
        tau: params.tau,
        initial: Vec::new(),
    };
    let dims = parts.dims();
    let blank = ModelParts::with_dims(dims, 2, params.beta, params.tau);
    parts.dynamics = blank.dynamics;
    parts.follower_cost = blank.follower_cost;
    parts.leader_costs = blank.leader_costs;
    parts.initial = blank.initial;

    let fnoise = params.observation.follower_noise;
    let alert = |sl: usize| if sl == FP { fnoise } else { 1.0 - fnoise };
    let suspicious = |sf: usize| match params.observation.leader_noise {
        Some(n) if target_of(sf).is_some() => vec![n, 1.0 - n],
        Some(n) => vec![1.0 - n, n],
        None => vec![1.0],
    };

    for s in dims.states() {
        for a in dims.actions() {
            let lnext = defender_step(params, s.leader, s.follower, a.leader);
            let fnext = attacker_step(params, s.leader, s.follower, a.follower);
            for (nl, pl) in lnext.iter().enumerate() {
                for (nf, pf) in fnext.iter().enumerate() {
                    if pl * pf == 0.0 {
                        continue;
                    }
                    let zf = [1.0 - alert(nl), alert(nl)];
                    for (zl, pzl) in suspicious(nf).into_iter().enumerate() {
                        for (zfi, pzf) in zf.iter().enumerate() {
                            let p = pl * pf * pzl * pzf;
                            if p > 0.0 {
                                parts.add_prob(s, a, Joint::new(zl, zfi), Joint::new(nl, nf), p);
                            }
                        }
                    }
                }
            }
            let vul = vulnerability(params, s.leader, s.follower);
            parts.set_leader_cost(0, s, a, -productivity(params, s.leader));
            parts.set_leader_cost(1, s, a, vul);
            let effort = if s.leader == SD || a.follower == HOLD {
                0.0
            } else {
                params.attacker.effort
            };
            parts.set_follower_cost(s, a, -vul + effort);
        }
    }
    for (sf, p) in params.attacker.initial.iter().enumerate() {
        parts.set_initial(Joint::new(FP, sf), *p);
    }
    PomgModel::new(parts)
}

/// Every deterministic leader policy, ordered lexicographically by the
/// action chosen in each window (first window most significant).
pub fn enumerate_deterministic(game: &Game, cap: usize) -> Result<Vec<FiniteMemoryPolicy>> {
    let n = game.leader().len();
    let na = game.leader().n_actions();
    let count = (na as f64).powi(n as i32);
    if count > cap as f64 {
        return Err(Error::CapExceeded {
            what: "deterministic leader policy",
            count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; n];
    loop {
        out.push(FiniteMemoryPolicy::deterministic(Agent::Leader, na, &digits)?);
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < na {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// One row of the decision-support table.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRow {
    pub id: String,
    /// Other policies with the same fitness.
    pub equivalents: Vec<String>,
    pub productivity: f64,
    pub vulnerability: f64,
    pub productivity_ratio: f64,
    pub vulnerability_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTable {
    pub rows: Vec<DecisionRow>,
    /// Set when the ratio denominators were not positive and absolute values
    /// are shown instead.
    pub productivity_absolute: bool,
    pub vulnerability_absolute: bool,
}

/// Fitness values within this distance are one row.
pub const SAME_FITNESS_TOL: f64 = 1e-9;

/// Table of a front of `(policy id, (−productivity, vulnerability))`,
/// sorted by productivity descending, with productivity relative to the
/// front's maximum and vulnerability relative to its minimum.
pub fn decision_support_table(front: &[(String, Vec<f64>)]) -> Result<DecisionTable> {
    if front.is_empty() {
        return Err(Error::InvalidParameter("decision table needs a nonempty front".into()));
    }
    if let Some((id, f)) = front.iter().find(|(_, f)| f.len() != 2) {
        return Err(Error::InvalidParameter(format!(
            "policy {id} has {} criteria, the table needs 2",
            f.len()
        )));
    }
    let mut rows: Vec<DecisionRow> = Vec::new();
    for (id, f) in front {
        let (prod, vul) = (-f[0], f[1]);
        match rows.iter_mut().find(|r| {
            (r.productivity - prod).abs() <= SAME_FITNESS_TOL && (r.vulnerability - vul).abs() <= SAME_FITNESS_TOL
        }) {
            Some(r) => r.equivalents.push(id.clone()),
            None => rows.push(DecisionRow {
                id: id.clone(),
                equivalents: Vec::new(),
                productivity: prod,
                vulnerability: vul,
                productivity_ratio: 0.0,
                vulnerability_ratio: 0.0,
            }),
        }
    }
    rows.sort_by(|a, b| {
        b.productivity
            .total_cmp(&a.productivity)
            .then(a.vulnerability.total_cmp(&b.vulnerability))
            .then_with(|| a.id.cmp(&b.id))
    });
    let max_prod = rows.iter().map(|r| r.productivity).fold(f64::NEG_INFINITY, f64::max);
    let min_vul = rows.iter().map(|r| r.vulnerability).fold(f64::INFINITY, f64::min);
    let productivity_absolute = max_prod <= 0.0;
    let vulnerability_absolute = min_vul <= 0.0;
    for r in &mut rows {
        r.productivity_ratio = if productivity_absolute {
            r.productivity
        } else {
            r.productivity / max_prod
        };
        r.vulnerability_ratio = if vulnerability_absolute {
            r.vulnerability
        } else {
            r.vulnerability / min_vul
        };
    }
    Ok(DecisionTable {
        rows,
        productivity_absolute,
        vulnerability_absolute,
    })
}

impl DecisionTable {
    fn headers(&self) -> (&'static str, &'static str) {
        (
            if self.productivity_absolute {
                "productivity (absolute)"
            } else {
                "productivity (ratio to maximum)"
            },
            if self.vulnerability_absolute {
                "vulnerability (absolute)"
            } else {
                "vulnerability (ratio to minimum)"
            },
        )
    }

    /// Aligned plain-text rendering with three decimals.
    pub fn render_text(&self) -> String {
        let (hp, hv) = self.headers();
        let width = self.rows.iter().map(|r| r.id.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {hp:>31}  {hv:>32}", "policy");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>31.3}  {:>32.3}",
                r.id, r.productivity_ratio, r.vulnerability_ratio
            );
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "policy,productivity,vulnerability,productivity_ratio,vulnerability_ratio,absolute_productivity,absolute_vulnerability,equivalents\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{:.3},{:.3},{},{},{}",
                r.id,
                r.productivity,
                r.vulnerability,
                r.productivity_ratio,
                r.vulnerability_ratio,
                self.productivity_absolute,
                self.vulnerability_absolute,
                r.equivalents.join(";")
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_build() {
        let m = build_model(&ScenarioParams::default()).unwrap();
        assert_eq!(m.criteria(), 2);
        assert_eq!(m.dims().leader_states, 4);
        assert_eq!(m.dims().follower_states, 5);
    }

    #[test]
    fn attacker_rows_are_stochastic() {
        let p = ScenarioParams::default();
        for sl in 0..4 {
            for sf in 0..5 {
                for af in 0..3 {
                    let s: f64 = attacker_step(&p, sl, sf, af).iter().sum();
                    assert!((s - 1.0).abs() < 1e-12, "{sl} {sf} {af}");
                }
            }
        }
    }

    #[test]
    fn adjacency_only() {
        let p = ScenarioParams::default();
        let edge_ok = |from: usize, to: usize| {
            from == to
                || to == O
                || (from == O && (to == pt(0) || to == pt(1)))
                || (1..=TARGETS).any(|k| (from == k && to == k + TARGETS) || (from == k + TARGETS && to == k))
        };
        for sl in 0..4 {
            for sf in 0..5 {
                for af in 0..3 {
                    for (to, q) in attacker_step(&p, sl, sf, af).iter().enumerate() {
                        if *q > 0.0 {
                            assert!(edge_ok(sf, to), "{sf} -> {to}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut p = ScenarioParams::default();
        p.attacker.target_choice = [0.7, 0.7];
        p.defender.recovery = 1.5;
        let Err(Error::Validation(v)) = build_model(&p) else {
            panic!("expected validation failure")
        };
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn params_round_trip() {
        let p = ScenarioParams::default();
        assert_eq!(ScenarioParams::from_json_str(&p.to_json_string()).unwrap(), p);
    }

    #[test]
    fn two_policy_ratios() {
        let front = vec![("a".to_string(), vec![-10.0, 4.0]), ("b".to_string(), vec![-5.0, 2.0])];
        let t = decision_support_table(&front).unwrap();
        let ratios: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.productivity_ratio, r.vulnerability_ratio)).collect();
        assert_eq!(ratios, vec![(1.0, 2.0), (0.5, 1.0)]);
    }

    #[test]
    fn single_row_and_zero_guard() {
        let t = decision_support_table(&[("x".to_string(), vec![-3.0, 1.5])]).unwrap();
        assert_eq!((t.rows[0].productivity_ratio, t.rows[0].vulnerability_ratio), (1.0, 1.0));
        let t = decision_support_table(&[("x".to_string(), vec![-3.0, 0.0])]).unwrap();
        assert!(t.vulnerability_absolute);
        assert!(t.render_text().contains("absolute"));
    }
}
