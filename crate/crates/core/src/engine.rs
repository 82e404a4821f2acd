//! Controller execution: step-wise sessions, bounded trace realization and
//! domination between controllers.
//!
//! Two kinds of controllers drive a session:
//!
//! * a positional [`ControllerTable`] mapping (enacted state, request) to a
//!   behavior index;
//! * an imported controller read off a [`Synthesis`]: the session tracks the
//!   set of kept full states that explain the observed history (same action
//!   sequence, same current enacted state) and delegates along a kept
//!   transition of one of them.
//!
//! Imported sessions accept requests either as transitions of the original
//! target ([`RequestSpace::Target`]) or of the approximation itself
//! ([`RequestSpace::Approximation`]). Approximation requests carry the
//! commitment the approximation may demand (which branch a `movie` request
//! continues into), so any walk of the approximation is honored end to end.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::approx::Synthesis;
use crate::model::{ActionId, Ltfs, StateId, SystemSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("E_REQUEST_REJECTED: {0}")]
    RequestRejected(String),
    #[error("E_SESSION_CLOSED: the session accepts no further requests")]
    SessionClosed,
}

/// A requested transition `from -action-> to`, by state and action names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Request {
    pub from: String,
    pub action: String,
    pub to: String,
}

impl Request {
    pub fn new(from: impl Into<String>, action: impl Into<String>, to: impl Into<String>) -> Self {
        Request {
            from: from.into(),
            action: action.into(),
            to: to.into(),
        }
    }

    /// Request for transition `i` of `l`.
    pub fn of(l: &Ltfs, i: usize) -> Self {
        let t = l.transition(i);
        Request::new(l.state_name(t.from), l.action_name(t.action), l.state_name(t.to))
    }

    /// Parses the `from action to` line format.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace();
        let r = Request::new(parts.next()?, parts.next()?, parts.next()?);
        parts.next().is_none().then_some(r)
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.from, self.action, self.to)
    }
}

/// Positional controller: (enacted-state tuple, target transition) -> 1-based
/// behavior index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControllerTable {
    entries: BTreeMap<(Vec<StateId>, usize), usize>,
}

impl ControllerTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tabulates `f` over every tuple of the full enacted state space and
    /// every target transition.
    pub fn from_fn(
        sys: &SystemSpec,
        target: &Ltfs,
        mut f: impl FnMut(&[StateId], usize) -> Option<usize>,
    ) -> Self {
        let sizes: Vec<usize> = sys.behaviors().iter().map(Ltfs::state_count).collect();
        let mut table = ControllerTable::new();
        let mut tuple = vec![0; sizes.len()];
        'outer: loop {
            for r in 0..target.transitions().len() {
                if let Some(k) = f(&tuple, r) {
                    table.insert(tuple.clone(), r, k);
                }
            }
            for i in (0..tuple.len()).rev() {
                tuple[i] += 1;
                if tuple[i] < sizes[i] {
                    continue 'outer;
                }
                tuple[i] = 0;
            }
            break;
        }
        table
    }

    pub fn insert(&mut self, sys_state: Vec<StateId>, request: usize, index: usize) {
        self.entries.insert((sys_state, request), index);
    }

    pub fn get(&self, sys_state: &[StateId], request: usize) -> Option<usize> {
        self.entries.get(&(sys_state.to_vec(), request)).copied()
    }

    pub fn is_defined(&self, sys_state: &[StateId], request: usize) -> bool {
        self.get(sys_state, request).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Picks among the nondeterministic outcomes of a delegated action.
#[derive(Debug, Clone)]
pub enum Resolver {
    Random(Box<ChaCha8Rng>),
    /// Outcome leaving the fewest options open one step ahead.
    Adversarial,
}

impl Resolver {
    pub fn random(seed: u64) -> Self {
        Resolver::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn tag(&self) -> ResolverTag {
        match self {
            Resolver::Random(_) => ResolverTag::Random,
            Resolver::Adversarial => ResolverTag::Adversarial,
        }
    }

    /// `scores[i]` is the lookahead score of outcome `i`.
    fn choose(&mut self, scores: &[usize]) -> usize {
        match self {
            Resolver::Random(rng) => rng.random_range(0..scores.len()),
            Resolver::Adversarial => {
                let min = *scores.iter().min().expect("at least one outcome");
                scores.iter().position(|&s| s == min).unwrap()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolverTag {
    Random,
    Adversarial,
    /// Outcome chosen explicitly through [`Session::step_forced`].
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestSpace {
    Target,
    Approximation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub request: Request,
    pub honored: bool,
    pub delegated: Option<usize>,
    pub system_before: Vec<StateId>,
    pub system_after: Vec<StateId>,
    pub resolver: Option<ResolverTag>,
    /// Candidate full states after the step (imported sessions only).
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionLog {
    pub steps: Vec<StepRecord>,
}

impl SessionLog {
    pub fn honored(&self) -> usize {
        self.steps.iter().filter(|s| s.honored).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub index: usize,
    pub system_before: Vec<StateId>,
    pub system_after: Vec<StateId>,
}

/// A delegation option for a request: behavior `index`, justified by
/// `candidate` in imported sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Delegation {
    pub candidate: Option<usize>,
    pub index: usize,
}

#[derive(Debug, Clone)]
enum Driver<'a> {
    Table(&'a ControllerTable),
    Imported {
        synthesis: &'a Synthesis,
        space: RequestSpace,
    },
}

#[derive(Debug, Clone)]
pub struct Session<'a> {
    system: &'a SystemSpec,
    /// The Ltfs requests are drawn from.
    requests: &'a Ltfs,
    driver: Driver<'a>,
    sys_state: Vec<StateId>,
    request_state: StateId,
    candidates: Vec<usize>,
    log: SessionLog,
    closed: bool,
    max_steps: Option<usize>,
}

struct Plan {
    action: ActionId,
    to: StateId,
    options: Vec<Delegation>,
}

impl<'a> Session<'a> {
    pub fn with_table(system: &'a SystemSpec, target: &'a Ltfs, table: &'a ControllerTable) -> Self {
        Session {
            system,
            requests: target,
            driver: Driver::Table(table),
            sys_state: system.initial_tuple(),
            request_state: target.initial(),
            candidates: Vec::new(),
            log: SessionLog::default(),
            closed: false,
            max_steps: None,
        }
    }

    pub fn imported(synthesis: &'a Synthesis, space: RequestSpace) -> Self {
        let base = synthesis.pruned().base();
        let requests = match space {
            RequestSpace::Target => base.target(),
            RequestSpace::Approximation => synthesis.approximation(),
        };
        Session {
            system: base.system(),
            requests,
            driver: Driver::Imported { synthesis, space },
            sys_state: base.system().initial_tuple(),
            request_state: requests.initial(),
            candidates: vec![base.initial()],
            log: SessionLog::default(),
            closed: false,
            max_steps: None,
        }
    }

    pub fn with_max_steps(mut self, max: usize) -> Self {
        self.max_steps = Some(max);
        self
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn system_state(&self) -> &[StateId] {
        &self.sys_state
    }

    pub fn system(&self) -> &SystemSpec {
        self.system
    }

    /// Ltfs whose transitions this session accepts as requests.
    pub fn request_ltfs(&self) -> &Ltfs {
        self.requests
    }

    /// Current state of the request Ltfs.
    pub fn request_state(&self) -> StateId {
        self.request_state
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    fn reject(&mut self, request: &Request, why: String) -> SessionError {
        self.log.steps.push(StepRecord {
            request: request.clone(),
            honored: false,
            delegated: None,
            system_before: self.sys_state.clone(),
            system_after: self.sys_state.clone(),
            resolver: None,
            candidates: self.candidates.clone(),
        });
        SessionError::RequestRejected(why)
    }

    fn plan(&self, request: &Request) -> Result<Plan, String> {
        let r = self
            .requests
            .find_transition(&request.from, &request.action, &request.to)
            .ok_or_else(|| format!("`{request}` is not a transition of `{}`", self.requests.name()))?;
        let t = self.requests.transition(r);
        if t.from != self.request_state {
            return Err(format!(
                "`{request}` does not leave the current state `{}`",
                self.requests.state_name(self.request_state)
            ));
        }
        let action = self
            .system
            .action_id(&request.action)
            .ok_or_else(|| format!("no behavior offers `{}`", request.action))?;
        let mut options = Vec::new();
        match &self.driver {
            Driver::Table(table) => {
                if let Some(k) = table.get(&self.sys_state, r) {
                    if !self.system.post(k, self.sys_state[k - 1], action).is_empty() {
                        options.push(Delegation { candidate: None, index: k });
                    }
                }
            }
            Driver::Imported { synthesis, space } => {
                let pruned = synthesis.pruned();
                let lands = |dest: usize| match space {
                    RequestSpace::Target => pruned.base().tgt(dest) == t.to,
                    RequestSpace::Approximation => synthesis.block_of_full(dest) == Some(t.to),
                };
                for &c in &self.candidates {
                    for kt in pruned.kept_outgoing(c) {
                        let fits = kt.action == action && lands(kt.to);
                        if fits {
                            options.push(Delegation {
                                candidate: Some(c),
                                index: kt.index,
                            });
                        }
                    }
                }
                options.sort_unstable();
                options.dedup();
            }
        }
        if options.is_empty() {
            return Err(format!("no safe delegation for `{request}`"));
        }
        Ok(Plan {
            action,
            to: t.to,
            options,
        })
    }

    /// Delegation options for `request`, in tie-break order.
    pub fn options(&self, request: &Request) -> Result<Vec<Delegation>, SessionError> {
        self.plan(request)
            .map(|p| p.options)
            .map_err(SessionError::RequestRejected)
    }

    /// Possible system tuples after delegating `action` to `k`.
    fn outcomes(&self, k: usize, action: ActionId) -> Vec<Vec<StateId>> {
        self.system
            .post(k, self.sys_state[k - 1], action)
            .into_iter()
            .map(|s| {
                let mut next = self.sys_state.clone();
                next[k - 1] = s;
                next
            })
            .collect()
    }

    /// Candidate set after observing `outcome`.
    fn next_candidates(&self, action: ActionId, to: StateId, outcome: &[StateId]) -> Vec<usize> {
        let Driver::Imported { synthesis, space } = &self.driver else {
            return Vec::new();
        };
        let pruned = synthesis.pruned();
        let base = pruned.base();
        let Some(sys_id) = base.enacted().state_of(outcome) else {
            return Vec::new();
        };
        let lands = |dest: usize, strict: bool| match space {
            RequestSpace::Target => base.tgt(dest) == to,
            RequestSpace::Approximation => !strict || synthesis.block_of_full(dest) == Some(to),
        };
        let consistent = |strict: bool| {
            let mut next: BTreeSet<usize> = BTreeSet::new();
            for &c in &self.candidates {
                for kt in pruned.kept_outgoing(c) {
                    if kt.action == action && base.sys(kt.to) == sys_id && lands(kt.to, strict) {
                        next.insert(kt.to);
                    }
                }
            }
            next
        };
        // Approximation requests name a block; if no kept successor with the
        // observed system state lies in it, fall back to any block.
        let mut next = consistent(true);
        if next.is_empty() {
            next = consistent(false);
        }
        next.into_iter().collect()
    }

    /// Lookahead score of an outcome: how many options stay open.
    fn score(&self, action: ActionId, to: StateId, outcome: &[StateId]) -> usize {
        match &self.driver {
            Driver::Table(table) => self
                .requests
                .outgoing(to)
                .iter()
                .filter(|&&r| {
                    let t = self.requests.transition(r);
                    let Some(a) = self.system.action_id(self.requests.action_name(t.action)) else {
                        return false;
                    };
                    table
                        .get(outcome, r)
                        .is_some_and(|k| !self.system.post(k, outcome[k - 1], a).is_empty())
                })
                .count(),
            Driver::Imported { synthesis, .. } => {
                let pruned = synthesis.pruned();
                let succ: BTreeSet<usize> = self
                    .next_candidates(action, to, outcome)
                    .into_iter()
                    .flat_map(|c| pruned.kept_outgoing(c).map(|t| t.to))
                    .collect();
                succ.len()
            }
        }
    }

    fn apply(&mut self, request: &Request, plan: &Plan, option: usize, outcome: Option<usize>, resolver: Option<&mut Resolver>) -> StepOutcome {
        let d = plan.options[option];
        let outcomes = self.outcomes(d.index, plan.action);
        let (pick, tag) = match (outcome, resolver) {
            (Some(i), _) => (i, ResolverTag::Forced),
            (None, Some(res)) => {
                let scores: Vec<usize> = outcomes.iter().map(|o| self.score(plan.action, plan.to, o)).collect();
                (res.choose(&scores), res.tag())
            }
            (None, None) => (0, ResolverTag::Forced),
        };
        let after = outcomes[pick].clone();
        let before = std::mem::replace(&mut self.sys_state, after.clone());
        if matches!(self.driver, Driver::Imported { .. }) {
            // Candidates are computed relative to the pre-step candidate set.
            let saved = std::mem::replace(&mut self.sys_state, before.clone());
            self.candidates = self.next_candidates(plan.action, plan.to, &after);
            self.sys_state = saved;
        }
        self.request_state = plan.to;
        if let Driver::Imported {
            synthesis,
            space: RequestSpace::Approximation,
        } = &self.driver
        {
            // The outcome may leave the requested block. Follow the block
            // actually reached so the client sees where the system is.
            let synthesis: &Synthesis = synthesis;
            if let Some(block) = self.candidates.first().and_then(|&c| synthesis.block_of_full(c)) {
                self.request_state = block;
                self.candidates.retain(|&c| synthesis.block_of_full(c) == Some(block));
            }
        }
        self.log.steps.push(StepRecord {
            request: request.clone(),
            honored: true,
            delegated: Some(d.index),
            system_before: before.clone(),
            system_after: after.clone(),
            resolver: Some(tag),
            candidates: self.candidates.clone(),
        });
        StepOutcome {
            index: d.index,
            system_before: before,
            system_after: after,
        }
    }

    fn check_open(&mut self) -> Result<(), SessionError> {
        if self.closed {
            return Err(SessionError::SessionClosed);
        }
        if let Some(max) = self.max_steps {
            if self.log.steps.len() >= max {
                self.closed = true;
                return Err(SessionError::SessionClosed);
            }
        }
        Ok(())
    }

    /// Handles one request. Rejected requests leave the session unchanged
    /// apart from the log.
    pub fn step(&mut self, request: &Request, resolver: &mut Resolver) -> Result<StepOutcome, SessionError> {
        self.check_open()?;
        match self.plan(request) {
            Ok(plan) => Ok(self.apply(request, &plan, 0, None, Some(resolver))),
            Err(why) => Err(self.reject(request, why)),
        }
    }

    /// Number of nondeterministic outcomes of delegation option `option`.
    pub fn outcome_count(&self, request: &Request, option: usize) -> Result<usize, SessionError> {
        let plan = self.plan(request).map_err(SessionError::RequestRejected)?;
        let d = plan
            .options
            .get(option)
            .ok_or_else(|| SessionError::RequestRejected(format!("no option {option}")))?;
        Ok(self.outcomes(d.index, plan.action).len())
    }

    /// Handles a request with an explicit delegation option and outcome.
    pub fn step_forced(&mut self, request: &Request, option: usize, outcome: usize) -> Result<StepOutcome, SessionError> {
        self.check_open()?;
        let plan = match self.plan(request) {
            Ok(plan) => plan,
            Err(why) => return Err(self.reject(request, why)),
        };
        if option >= plan.options.len() {
            return Err(self.reject(request, format!("no option {option}")));
        }
        let n = self.outcomes(plan.options[option].index, plan.action).len();
        if outcome >= n {
            return Err(self.reject(request, format!("no outcome {outcome}")));
        }
        Ok(self.apply(request, &plan, option, Some(outcome), None))
    }
}

/// Bounded set of realized target traces, each a sequence of target
/// transition indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: BTreeSet<Vec<usize>>,
    pub depth: usize,
}

impl TraceSet {
    pub fn contains(&self, trace: &[usize]) -> bool {
        self.traces.contains(trace)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn is_subset(&self, other: &TraceSet) -> bool {
        self.traces.is_subset(&other.traces)
    }

    pub fn is_prefix_closed(&self) -> bool {
        self.traces
            .iter()
            .all(|t| t.is_empty() || self.traces.contains(&t[..t.len() - 1]))
    }
}

/// All target traces up to `depth` that `c` honors under every
/// nondeterministic outcome of the system.
pub fn realized_traces_bounded(c: &ControllerTable, sys: &SystemSpec, target: &Ltfs, depth: usize) -> TraceSet {
    let action_map: Vec<Option<ActionId>> = target.actions().iter().map(|a| sys.action_id(a)).collect();
    let mut traces = BTreeSet::new();
    let mut trace = Vec::new();
    let init: BTreeSet<Vec<StateId>> = BTreeSet::from([sys.initial_tuple()]);
    walk(c, sys, target, &action_map, depth, target.initial(), &init, &mut trace, &mut traces);
    TraceSet { traces, depth }
}

#[allow(clippy::too_many_arguments)]
fn walk(
    c: &ControllerTable,
    sys: &SystemSpec,
    target: &Ltfs,
    action_map: &[Option<ActionId>],
    depth: usize,
    t: StateId,
    states: &BTreeSet<Vec<StateId>>,
    trace: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<usize>>,
) {
    out.insert(trace.clone());
    if trace.len() == depth {
        return;
    }
    for &r in target.outgoing(t) {
        let tr = target.transition(r);
        let Some(a) = action_map[tr.action] else {
            continue;
        };
        let mut next = BTreeSet::new();
        let honored = states.iter().all(|s| {
            let Some(k) = c.get(s, r) else {
                return false;
            };
            let post = sys.post(k, s[k - 1], a);
            for b in &post {
                let mut n = s.clone();
                n[k - 1] = *b;
                next.insert(n);
            }
            !post.is_empty()
        });
        if honored {
            trace.push(r);
            walk(c, sys, target, action_map, depth, tr.to, &next, trace, out);
            trace.pop();
        }
    }
}

/// `(c1 ≥ c2, c1 > c2)` by inclusion of bounded realized traces.
pub fn dominates(
    c1: &ControllerTable,
    c2: &ControllerTable,
    sys: &SystemSpec,
    target: &Ltfs,
    depth: usize,
) -> (bool, bool) {
    let d1 = realized_traces_bounded(c1, sys, target, depth);
    let d2 = realized_traces_bounded(c2, sys, target, depth);
    let geq = d2.is_subset(&d1);
    (geq, geq && d1 != d2)
}
