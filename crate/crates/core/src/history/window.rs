use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Joint, PomgModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Leader,
    Follower,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Leader => Agent::Follower,
            Agent::Follower => Agent::Leader,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Agent::Leader => "leader",
            Agent::Follower => "follower",
        }
    }
}

/// Rendering of an empty (pre-epoch-0) slot.
pub const SENTINEL: &str = "-";

/// An agent's last `tau` observations, own states and own actions, newest first.
///
/// Slot `j` holds `z(t-j)`, `s(t-j)` and `a(t-j-1)`. The slot for epoch 0
/// carries the initial state with no observation and no previous action;
/// slots before epoch 0 are entirely `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub observations: Vec<Option<usize>>,
    pub states: Vec<Option<usize>>,
    pub actions: Vec<Option<usize>>,
}

/// The newest `(z(t+1), s(t+1), a(t))` triple appended by [`advance_window`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub observation: usize,
    pub state: usize,
    pub action: usize,
}

impl Step {
    pub fn new(observation: usize, state: usize, action: usize) -> Self {
        Step {
            observation,
            state,
            action,
        }
    }
}

impl Window {
    /// The window at epoch 0 for an agent starting in `state`.
    pub fn startup(tau: usize, state: usize) -> Self {
        let mut states = vec![None; tau];
        states[0] = Some(state);
        Window {
            observations: vec![None; tau],
            states,
            actions: vec![None; tau],
        }
    }

    pub fn tau(&self) -> usize {
        self.states.len()
    }

    pub fn current_state(&self) -> usize {
        self.states[0].expect("every window carries its current state")
    }

    /// Slot holding epoch 0, if the window reaches back that far.
    pub fn epoch_zero_slot(&self) -> Option<usize> {
        (0..self.tau()).find(|&j| self.observations[j].is_none() && self.states[j].is_some())
    }

    /// Checks the sentinel layout: full slots, then at most one epoch-0 slot,
    /// then empty slots.
    pub fn is_well_formed(&self) -> bool {
        let tau = self.tau();
        if tau == 0 || self.observations.len() != tau || self.actions.len() != tau {
            return false;
        }
        let mut phase = 0; // 0 full, 1 after epoch 0
        for j in 0..tau {
            let (z, s, a) = (self.observations[j], self.states[j], self.actions[j]);
            match (phase, z.is_some(), s.is_some(), a.is_some()) {
                (0, true, true, true) => {}
                (0, false, true, false) => phase = 1,
                (1, false, false, false) => {}
                _ => return false,
            }
        }
        self.states[0].is_some()
    }
}

/// Prepends `step` and drops the oldest slot.
pub fn advance_window(w: &Window, step: Step) -> Window {
    fn shift(v: &[Option<usize>], newest: usize) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(v.len());
        out.push(Some(newest));
        out.extend_from_slice(&v[..v.len() - 1]);
        out
    }
    Window {
        observations: shift(&w.observations, step.observation),
        states: shift(&w.states, step.state),
        actions: shift(&w.actions, step.action),
    }
}

/// Window-space construction settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowOptions {
    /// Keep only windows reachable from the initial distribution under some
    /// pair of policies.
    pub prune_unreachable: bool,
    pub cap: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            prune_unreachable: true,
            cap: 1_000_000,
        }
    }
}

const NO_SUCCESSOR: u32 = u32::MAX;

/// All windows of one agent, in canonical order, with a successor table.
#[derive(Clone, Debug)]
pub struct WindowSpace {
    agent: Agent,
    tau: usize,
    observation_names: Vec<String>,
    state_names: Vec<String>,
    action_names: Vec<String>,
    windows: Vec<Window>,
    index: HashMap<Window, usize>,
    successors: Vec<u32>,
    startup: Vec<Option<usize>>,
}

impl PartialEq for WindowSpace {
    fn eq(&self, other: &Self) -> bool {
        self.agent == other.agent && self.tau == other.tau && self.windows == other.windows
    }
}

struct AgentView {
    n_obs: usize,
    n_states: usize,
    n_actions: usize,
    n_other_states: usize,
    n_other_actions: usize,
}

fn view(model: &PomgModel, agent: Agent) -> AgentView {
    let d = model.dims();
    match agent {
        Agent::Leader => AgentView {
            n_obs: d.leader_observations,
            n_states: d.leader_states,
            n_actions: d.leader_actions,
            n_other_states: d.follower_states,
            n_other_actions: d.follower_actions,
        },
        Agent::Follower => AgentView {
            n_obs: d.follower_observations,
            n_states: d.follower_states,
            n_actions: d.follower_actions,
            n_other_states: d.leader_states,
            n_other_actions: d.leader_actions,
        },
    }
}

fn joint(agent: Agent, own: usize, other: usize) -> Joint {
    match agent {
        Agent::Leader => Joint::new(own, other),
        Agent::Follower => Joint::new(other, own),
    }
}

fn own(agent: Agent, j: Joint) -> usize {
    match agent {
        Agent::Leader => j.leader,
        Agent::Follower => j.follower,
    }
}

/// Number of sentinel-consistent windows without reachability pruning.
pub fn full_window_count(n_obs: usize, n_states: usize, n_actions: usize, tau: usize) -> f64 {
    let f = (n_obs * n_states * n_actions) as f64;
    let mut total = f.powi(tau as i32);
    for k in 0..tau {
        total += f.powi(k as i32) * n_states as f64;
    }
    total
}

/// Enumerates an agent's window space.
///
/// With pruning, windows are those reachable from the startup windows of
/// states with positive initial probability, closing over every opposing
/// state and every joint action, so the space is closed under the joint
/// dynamics for any policy pair.
pub fn enumerate_windows(model: &PomgModel, agent: Agent, options: &WindowOptions) -> Result<WindowSpace> {
    let v = view(model, agent);
    let tau = model.tau();
    let kind = agent.as_str();
    let mut windows: Vec<Window>;

    if options.prune_unreachable {
        let marginal = match agent {
            Agent::Leader => model.initial_leader_marginal(),
            Agent::Follower => model.initial_follower_marginal(),
        };
        let mut seen: HashMap<Window, ()> = HashMap::new();
        let mut queue = VecDeque::new();
        for (s, p) in marginal.iter().enumerate() {
            if *p > 0.0 {
                let w = Window::startup(tau, s);
                seen.insert(w.clone(), ());
                queue.push_back(w);
            }
        }
        while let Some(w) = queue.pop_front() {
            let s_own = w.current_state();
            for s_other in 0..v.n_other_states {
                let s = joint(agent, s_own, s_other);
                for a_own in 0..v.n_actions {
                    for a_other in 0..v.n_other_actions {
                        let a = joint(agent, a_own, a_other);
                        for o in model.outcomes(s, a) {
                            let next = advance_window(
                                &w,
                                Step::new(own(agent, o.observation), own(agent, o.next), a_own),
                            );
                            if !seen.contains_key(&next) {
                                if seen.len() >= options.cap {
                                    return Err(Error::WindowCap { kind, cap: options.cap });
                                }
                                seen.insert(next.clone(), ());
                                queue.push_back(next);
                            }
                        }
                    }
                }
            }
        }
        windows = seen.into_keys().collect();
    } else {
        let count = full_window_count(v.n_obs, v.n_states, v.n_actions, tau);
        if count > options.cap as f64 {
            return Err(Error::WindowCap { kind, cap: options.cap });
        }
        windows = Vec::with_capacity(count as usize);
        let full_slots: Vec<(usize, usize, usize)> = (0..v.n_obs)
            .flat_map(|z| (0..v.n_states).flat_map(move |s| (0..v.n_actions).map(move |a| (z, s, a))))
            .collect();
        // `k` full slots followed by the epoch-0 slot, or `tau` full slots.
        for k in 0..=tau {
            let mut digits = vec![0usize; k];
            let tail_states: Vec<Option<usize>> = if k < tau {
                (0..v.n_states).map(Some).collect()
            } else {
                vec![None]
            };
            loop {
                for start in &tail_states {
                    let mut w = Window {
                        observations: vec![None; tau],
                        states: vec![None; tau],
                        actions: vec![None; tau],
                    };
                    for (j, &d) in digits.iter().enumerate() {
                        let (z, s, a) = full_slots[d];
                        w.observations[j] = Some(z);
                        w.states[j] = Some(s);
                        w.actions[j] = Some(a);
                    }
                    if let Some(s0) = start {
                        w.states[k] = Some(*s0);
                    }
                    windows.push(w);
                }
                // odometer over the full slots
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < full_slots.len() {
                        break;
                    }
                    digits[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if k == 0 || pos == usize::MAX {
                    break;
                }
            }
        }
    }

    windows.sort();
    let index: HashMap<Window, usize> = windows.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let stride = v.n_obs * v.n_states * v.n_actions;
    let mut successors = vec![NO_SUCCESSOR; windows.len() * stride];
    for (i, w) in windows.iter().enumerate() {
        for z in 0..v.n_obs {
            for s in 0..v.n_states {
                for a in 0..v.n_actions {
                    let next = advance_window(w, Step::new(z, s, a));
                    if let Some(&j) = index.get(&next) {
                        successors[i * stride + (z * v.n_states + s) * v.n_actions + a] = j as u32;
                    }
                }
            }
        }
    }
    let startup = (0..v.n_states)
        .map(|s| index.get(&Window::startup(tau, s)).copied())
        .collect();

    let p = model.parts();
    let (obs, states, actions) = match agent {
        Agent::Leader => (&p.leader_observations, &p.leader_states, &p.leader_actions),
        Agent::Follower => (&p.follower_observations, &p.follower_states, &p.follower_actions),
    };
    Ok(WindowSpace {
        agent,
        tau,
        observation_names: obs.clone(),
        state_names: states.clone(),
        action_names: actions.clone(),
        windows,
        index,
        successors,
        startup,
    })
}

impl WindowSpace {
    pub fn agent(&self) -> Agent {
        self.agent
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn window(&self, i: usize) -> &Window {
        &self.windows[i]
    }

    pub fn index_of(&self, w: &Window) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observation_names.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    /// Index of `advance_window(window(i), step)`, if that window is in the space.
    pub fn successor(&self, i: usize, step: Step) -> Option<usize> {
        let ns = self.state_names.len();
        let na = self.action_names.len();
        let stride = self.observation_names.len() * ns * na;
        let j = self.successors[i * stride + (step.observation * ns + step.state) * na + step.action];
        (j != NO_SUCCESSOR).then_some(j as usize)
    }

    /// Index of the epoch-0 window for `state`, if present.
    pub fn startup(&self, state: usize) -> Option<usize> {
        self.startup[state]
    }

    /// `z:..|s:..|a:..` with slots newest first and `-` for sentinels.
    pub fn render(&self, i: usize) -> String {
        let w = &self.windows[i];
        let field = |vals: &[Option<usize>], names: &[String]| {
            let mut out = String::new();
            for (k, v) in vals.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match v {
                    Some(x) => out.push_str(&names[*x]),
                    None => out.push_str(SENTINEL),
                }
            }
            out
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "z:{}|s:{}|a:{}",
            field(&w.observations, &self.observation_names),
            field(&w.states, &self.state_names),
            field(&w.actions, &self.action_names)
        );
        s
    }

    /// Inverse of [`WindowSpace::render`].
    pub fn parse(&self, text: &str) -> Result<usize> {
        let bad = |why: &str| Error::Parse(format!("window '{text}': {why}"));
        let parts: Vec<&str> = text.split('|').collect();
        if parts.len() != 3 {
            return Err(bad("expected three '|'-separated fields"));
        }
        let field = |part: &str, prefix: &str, names: &[String]| -> Result<Vec<Option<usize>>> {
            let body = part
                .strip_prefix(prefix)
                .ok_or_else(|| bad(&format!("field should start with '{prefix}'")))?;
            let vals: Vec<Option<usize>> = body
                .split(',')
                .map(|tok| {
                    if tok == SENTINEL {
                        Ok(None)
                    } else {
                        names
                            .iter()
                            .position(|n| n == tok)
                            .map(Some)
                            .ok_or_else(|| bad(&format!("unknown name '{tok}'")))
                    }
                })
                .collect::<Result<_>>()?;
            if vals.len() != self.tau {
                return Err(bad(&format!("expected {} entries per field", self.tau)));
            }
            Ok(vals)
        };
        let w = Window {
            observations: field(parts[0], "z:", &self.observation_names)?,
            states: field(parts[1], "s:", &self.state_names)?,
            actions: field(parts[2], "a:", &self.action_names)?,
        };
        self.index_of(&w)
            .ok_or_else(|| bad(&format!("not in the {} window space", self.agent.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dims, ModelParts};

    fn dense_model(n: usize, tau: usize) -> PomgModel {
        let dims = Dims {
            leader_states: n,
            follower_states: n,
            leader_actions: n,
            follower_actions: n,
            leader_observations: n,
            follower_observations: n,
        };
        let mut parts = ModelParts::with_dims(dims, 1, 0.9, tau);
        let k = dims.outcome_count() as f64;
        for s in dims.states() {
            for a in dims.actions() {
                for z in dims.observations() {
                    for next in dims.states() {
                        parts.set_prob(s, a, z, next, 1.0 / k);
                    }
                }
            }
        }
        for s in dims.states() {
            parts.set_initial(s, 1.0 / dims.joint_states() as f64);
        }
        PomgModel::new(parts).unwrap()
    }

    #[test]
    fn tau_one_binary_counts() {
        let m = dense_model(2, 1);
        for prune in [true, false] {
            let opts = WindowOptions {
                prune_unreachable: prune,
                ..Default::default()
            };
            let space = enumerate_windows(&m, Agent::Leader, &opts).unwrap();
            let startup = space.windows().iter().filter(|w| w.epoch_zero_slot().is_some()).count();
            assert_eq!(space.len() - startup, 8);
            assert_eq!(startup, 2);
        }
    }

    #[test]
    fn singleton_has_one_full_window() {
        let m = dense_model(1, 1);
        let space = enumerate_windows(&m, Agent::Follower, &WindowOptions::default()).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.windows().iter().filter(|w| w.epoch_zero_slot().is_none()).count(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let m = dense_model(2, 3);
        let opts = WindowOptions {
            prune_unreachable: false,
            cap: 100,
        };
        assert!(matches!(
            enumerate_windows(&m, Agent::Leader, &opts),
            Err(Error::WindowCap { .. })
        ));
        let opts = WindowOptions { cap: 100, ..Default::default() };
        assert!(enumerate_windows(&m, Agent::Leader, &opts).is_err());
    }

    #[test]
    fn advance_tau_one_replaces() {
        let w = Window {
            observations: vec![Some(1)],
            states: vec![Some(1)],
            actions: vec![Some(0)],
        };
        let next = advance_window(&w, Step::new(2, 2, 1));
        assert_eq!(next.observations, vec![Some(2)]);
        assert_eq!(next.states, vec![Some(2)]);
        assert_eq!(next.actions, vec![Some(1)]);
    }

    #[test]
    fn advance_tau_two_shifts() {
        let w = Window {
            observations: vec![Some(0), None],
            states: vec![Some(1), Some(0)],
            actions: vec![Some(1), None],
        };
        let next = advance_window(&w, Step::new(1, 0, 0));
        assert_eq!(next.observations, vec![Some(1), Some(0)]);
        assert_eq!(next.states, vec![Some(0), Some(1)]);
        assert_eq!(next.actions, vec![Some(0), Some(1)]);
        assert!(next.is_well_formed());
    }

    #[test]
    fn render_parse_round_trip() {
        let m = dense_model(2, 2);
        let space = enumerate_windows(&m, Agent::Leader, &WindowOptions::default()).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.parse(&space.render(i)).unwrap(), i);
        }
        assert_eq!(space.render(space.startup(1).unwrap()), "z:-,-|s:sl1,-|a:-,-");
        assert!(space.parse("z:-|s:sl1|a:-").is_err());
    }

    #[test]
    fn successor_table_matches_advance() {
        let m = dense_model(2, 2);
        let space = enumerate_windows(&m, Agent::Follower, &WindowOptions::default()).unwrap();
        for i in 0..space.len() {
            let step = Step::new(1, 0, 1);
            let j = space.successor(i, step).unwrap();
            assert_eq!(space.window(j), &advance_window(space.window(i), step));
        }
    }
}
