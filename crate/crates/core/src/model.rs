//! Labelled finite transition systems: the shared representation of available
//! behaviors, targets and approximations.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Action label reserved for the self-loops added by [`TerminalPolicy::Loop`].
pub const IDLE_ACTION: &str = "__idle__";

pub type StateId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: StateId,
    pub action: ActionId,
    pub to: StateId,
}

/// What to do with states that have no outgoing transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TerminalPolicy {
    #[default]
    Reject,
    /// Add an `__idle__` self-loop.
    Loop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTransition {
    pub from: String,
    pub action: String,
    pub to: String,
}

impl RawTransition {
    pub fn new(from: impl Into<String>, action: impl Into<String>, to: impl Into<String>) -> Self {
        RawTransition {
            from: from.into(),
            action: action.into(),
            to: to.into(),
        }
    }
}

/// An unvalidated behavior description, as read from a problem file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBehavior {
    pub name: String,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<RawTransition>,
}

impl RawBehavior {
    /// Convenience constructor for `(from, action, to)` triples.
    pub fn new(name: &str, states: &[&str], initial: &str, transitions: &[(&str, &str, &str)]) -> Self {
        RawBehavior {
            name: name.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
            initial: initial.to_string(),
            transitions: transitions
                .iter()
                .map(|(f, a, t)| RawTransition::new(*f, *a, *t))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("E_BAD_INITIAL: initial state `{initial}` of `{behavior}` is not a declared state")]
    BadInitial { behavior: String, initial: String },
    #[error("E_UNKNOWN_STATE: transition {from} -{action}-> {to} of `{behavior}` uses undeclared state `{state}`")]
    UnknownState {
        behavior: String,
        state: String,
        from: String,
        action: String,
        to: String,
    },
    #[error("E_TERMINAL_STATE: state `{state}` of `{behavior}` has no outgoing transition")]
    TerminalState { behavior: String, state: String },
    #[error("E_RESERVED_ACTION: `{behavior}` uses the reserved action `{IDLE_ACTION}`")]
    ReservedAction { behavior: String },
    #[error("duplicate state `{state}` in `{behavior}`")]
    DuplicateState { behavior: String, state: String },
    #[error("E_EMPTY_SYSTEM: a system needs at least one behavior")]
    EmptySystem,
    #[error("duplicate behavior name `{0}`")]
    DuplicateBehavior(String),
}

/// A labelled finite transition system.
///
/// States and actions are interned to dense ids in declaration order.
/// Transitions keep their first-declared order with duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ltfs {
    name: String,
    states: Vec<String>,
    actions: Vec<String>,
    initial: StateId,
    transitions: Vec<Transition>,
    out: Vec<Vec<usize>>,
}

/// Validates a raw behavior description under the given terminal-state policy.
pub fn validate_behavior(raw: &RawBehavior, policy: TerminalPolicy) -> Result<Ltfs, ModelError> {
    let behavior = || raw.name.clone();
    let mut state_ids = HashMap::with_capacity(raw.states.len());
    for (i, s) in raw.states.iter().enumerate() {
        if state_ids.insert(s.as_str(), i).is_some() {
            return Err(ModelError::DuplicateState {
                behavior: behavior(),
                state: s.clone(),
            });
        }
    }
    let initial = *state_ids
        .get(raw.initial.as_str())
        .ok_or_else(|| ModelError::BadInitial {
            behavior: behavior(),
            initial: raw.initial.clone(),
        })?;

    let mut actions: Vec<String> = Vec::new();
    let mut action_ids: HashMap<&str, ActionId> = HashMap::new();
    let mut transitions = Vec::with_capacity(raw.transitions.len());
    for t in &raw.transitions {
        if t.action == IDLE_ACTION {
            return Err(ModelError::ReservedAction { behavior: behavior() });
        }
        let lookup = |s: &String| {
            state_ids.get(s.as_str()).copied().ok_or_else(|| ModelError::UnknownState {
                behavior: behavior(),
                state: s.clone(),
                from: t.from.clone(),
                action: t.action.clone(),
                to: t.to.clone(),
            })
        };
        let from = lookup(&t.from)?;
        let to = lookup(&t.to)?;
        let action = *action_ids.entry(t.action.as_str()).or_insert_with(|| {
            actions.push(t.action.clone());
            actions.len() - 1
        });
        transitions.push(Transition { from, action, to });
    }

    let mut has_out = vec![false; raw.states.len()];
    for t in &transitions {
        has_out[t.from] = true;
    }
    let mut idle = None;
    for (s, &ok) in has_out.iter().enumerate() {
        if ok {
            continue;
        }
        match policy {
            TerminalPolicy::Reject => {
                return Err(ModelError::TerminalState {
                    behavior: behavior(),
                    state: raw.states[s].clone(),
                })
            }
            TerminalPolicy::Loop => {
                let a = *idle.get_or_insert_with(|| {
                    actions.push(IDLE_ACTION.to_string());
                    actions.len() - 1
                });
                transitions.push(Transition { from: s, action: a, to: s });
            }
        }
    }

    Ok(Ltfs::from_parts(
        raw.name.clone(),
        raw.states.clone(),
        actions,
        initial,
        transitions,
    ))
}

impl Ltfs {
    /// Builds an Ltfs without the non-termination check. Duplicate transitions
    /// are dropped, keeping first occurrences.
    pub(crate) fn from_parts(
        name: String,
        states: Vec<String>,
        actions: Vec<String>,
        initial: StateId,
        transitions: Vec<Transition>,
    ) -> Self {
        let mut seen = HashSet::with_capacity(transitions.len());
        let transitions: Vec<Transition> = transitions.into_iter().filter(|t| seen.insert(*t)).collect();
        let mut out = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        Ltfs {
            name,
            states,
            actions,
            initial,
            transitions,
            out,
        }
    }

    /// Builds an Ltfs from `(from, action, to)` triples over state ids,
    /// interning actions in order of appearance. No terminal-state check:
    /// derived systems (projections, quotients, the empty approximation) may
    /// have states without outgoing transitions.
    pub fn from_named(
        name: String,
        states: Vec<String>,
        initial: StateId,
        transitions: impl IntoIterator<Item = (StateId, String, StateId)>,
    ) -> Self {
        let mut actions = Vec::new();
        let mut ids: HashMap<String, ActionId> = HashMap::new();
        let transitions = transitions
            .into_iter()
            .map(|(from, a, to)| {
                let action = *ids.entry(a.clone()).or_insert_with(|| {
                    actions.push(a);
                    actions.len() - 1
                });
                Transition { from, action, to }
            })
            .collect();
        Ltfs::from_parts(name, states, actions, initial, transitions)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, i: usize) -> Transition {
        self.transitions[i]
    }

    /// Indexes (into [`Ltfs::transitions`]) of the transitions leaving `s`.
    pub fn outgoing(&self, s: StateId) -> &[usize] {
        &self.out[s]
    }

    pub fn successors(&self, s: StateId, a: ActionId) -> impl Iterator<Item = StateId> + '_ {
        self.out[s]
            .iter()
            .map(move |&i| self.transitions[i])
            .filter(move |t| t.action == a)
            .map(|t| t.to)
    }

    /// Looks up a transition by state and action names.
    pub fn find_transition(&self, from: &str, action: &str, to: &str) -> Option<usize> {
        let (f, a, t) = (self.state_id(from)?, self.action_id(action)?, self.state_id(to)?);
        self.out[f]
            .iter()
            .copied()
            .find(|&i| self.transitions[i].action == a && self.transitions[i].to == t)
    }

    /// True for the single-state, transition-free result of an approximation
    /// in which nothing can be realized.
    pub fn is_empty_approximation(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        let mut seen = HashSet::new();
        self.transitions.iter().all(|t| seen.insert((t.from, t.action)))
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Converts back into a raw description. Idle loops added by
    /// [`TerminalPolicy::Loop`] are dropped so re-validation recreates them.
    pub fn to_raw(&self) -> RawBehavior {
        RawBehavior {
            name: self.name.clone(),
            states: self.states.clone(),
            initial: self.states[self.initial].clone(),
            transitions: self
                .transitions
                .iter()
                .filter(|t| self.actions[t.action] != IDLE_ACTION)
                .map(|t| {
                    RawTransition::new(
                        self.states[t.from].clone(),
                        self.actions[t.action].clone(),
                        self.states[t.to].clone(),
                    )
                })
                .collect(),
        }
    }

    pub fn format_transition(&self, i: usize) -> String {
        let t = self.transitions[i];
        format!(
            "{} -{}-> {}",
            self.states[t.from], self.actions[t.action], self.states[t.to]
        )
    }
}

pub fn is_deterministic(b: &Ltfs) -> bool {
    b.is_deterministic()
}

impl fmt::Display for Ltfs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (initial {})", self.name, self.states[self.initial])?;
        for i in 0..self.transitions.len() {
            writeln!(f, "  {}", self.format_transition(i))?;
        }
        Ok(())
    }
}

/// An available system: an ordered, non-empty list of behaviors.
///
/// Behaviors are indexed `1..=n` in the public API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    behaviors: Vec<Ltfs>,
    alphabet: Vec<String>,
    /// Per behavior: local action id -> alphabet id.
    local_to_global: Vec<Vec<ActionId>>,
}

impl SystemSpec {
    pub fn new(behaviors: Vec<Ltfs>) -> Result<Self, ModelError> {
        if behaviors.is_empty() {
            return Err(ModelError::EmptySystem);
        }
        let mut names = HashSet::new();
        for b in &behaviors {
            if !names.insert(b.name()) {
                return Err(ModelError::DuplicateBehavior(b.name().to_string()));
            }
        }
        let mut alphabet: Vec<String> = Vec::new();
        let mut ids: HashMap<String, ActionId> = HashMap::new();
        let local_to_global = behaviors
            .iter()
            .map(|b| {
                b.actions()
                    .iter()
                    .map(|a| {
                        *ids.entry(a.clone()).or_insert_with(|| {
                            alphabet.push(a.clone());
                            alphabet.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(SystemSpec {
            behaviors,
            alphabet,
            local_to_global,
        })
    }

    pub fn len(&self) -> usize {
        self.behaviors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviors.is_empty()
    }

    pub fn behaviors(&self) -> &[Ltfs] {
        &self.behaviors
    }

    /// Behavior with 1-based index `k`.
    pub fn behavior(&self, k: usize) -> &Ltfs {
        &self.behaviors[k - 1]
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn is_deterministic(&self) -> bool {
        self.behaviors.iter().all(Ltfs::is_deterministic)
    }

    pub fn initial_tuple(&self) -> Vec<StateId> {
        self.behaviors.iter().map(Ltfs::initial).collect()
    }

    /// Local successors of behavior `k` (1-based) from `state` on global action `action`.
    pub fn post(&self, k: usize, state: StateId, action: ActionId) -> Vec<StateId> {
        let b = &self.behaviors[k - 1];
        let map = &self.local_to_global[k - 1];
        b.outgoing(state)
            .iter()
            .map(|&i| b.transition(i))
            .filter(|t| map[t.action] == action)
            .map(|t| t.to)
            .collect()
    }

    /// Global id of local action `a` of behavior `k` (1-based).
    pub fn global_action(&self, k: usize, a: ActionId) -> ActionId {
        self.local_to_global[k - 1][a]
    }

    /// Renders a component tuple as `(a0,b0,...)`.
    pub fn format_tuple(&self, tuple: &[StateId]) -> String {
        let parts: Vec<&str> = tuple
            .iter()
            .zip(&self.behaviors)
            .map(|(&s, b)| b.state_name(s))
            .collect();
        format!("({})", parts.join(","))
    }

    /// Parses `(a0,b0,...)` back into a component tuple.
    pub fn parse_tuple(&self, text: &str) -> Option<Vec<StateId>> {
        let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != self.behaviors.len() {
            return None;
        }
        parts
            .iter()
            .zip(&self.behaviors)
            .map(|(p, b)| b.state_id(p))
            .collect()
    }
}
