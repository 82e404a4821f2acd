//! Optimal target approximation: iterative pruning of the full enacted system,
//! index projection and bisimulation compression, plus controller-generator
//! extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::model::{ActionId, Ltfs, SystemSpec};
use crate::product::{EnactedSystem, FullEnactedSystem, IndexedTransition, Materialization};
use crate::simrel::{bisim_partition, quotient, sim_equivalent, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("E_EMPTY_APPROX: the approximation is empty, no delegation is safe")]
    EmptyApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalKind {
    DeadEndState,
    RiskyTransition,
}

/// One deletion performed by [`prune_fixpoint`]. `item` is a full-system
/// state or transition id depending on `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Removal {
    pub round: usize,
    pub kind: RemovalKind,
    pub item: usize,
}

/// The full enacted system after dead-end and risky-transition pruning.
#[derive(Debug, Clone)]
pub struct PrunedFull {
    base: FullEnactedSystem,
    kept_states: Vec<bool>,
    kept_transitions: Vec<bool>,
    log: Vec<Removal>,
    empty: bool,
}

/// Key identifying a request-delegation pair: source, action, delegated
/// behavior and target destination.
fn group_key(full: &FullEnactedSystem, t: &IndexedTransition) -> (usize, ActionId, usize, usize) {
    (t.from, t.action, t.index, full.tgt(t.to))
}

pub fn prune_fixpoint(full: FullEnactedSystem) -> PrunedFull {
    let n = full.state_count();
    let m = full.transitions().len();

    let mut group_ids = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = Vec::with_capacity(m);
    for (i, t) in full.transitions().iter().enumerate() {
        let g = *group_ids.entry(group_key(&full, t)).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
        group_of.push(g);
    }

    let mut dead = vec![false; n];
    let mut kept_transitions = vec![true; m];
    let mut out_count: Vec<usize> = (0..n).map(|s| full.outgoing(s).len()).collect();
    let mut log = Vec::new();
    let mut frontier: Vec<usize> = (0..n).filter(|&s| out_count[s] == 0).collect();
    let mut round = 0;
    while !frontier.is_empty() {
        round += 1;
        frontier.sort_unstable();
        for &s in &frontier {
            dead[s] = true;
            if s != full.initial() {
                log.push(Removal {
                    round,
                    kind: RemovalKind::DeadEndState,
                    item: s,
                });
            }
        }
        let mut next = Vec::new();
        for &s in &frontier {
            for &i in full.incoming(s) {
                if !kept_transitions[i] {
                    continue;
                }
                for &j in &groups[group_of[i]] {
                    if !kept_transitions[j] {
                        continue;
                    }
                    kept_transitions[j] = false;
                    log.push(Removal {
                        round,
                        kind: RemovalKind::RiskyTransition,
                        item: j,
                    });
                    let src = full.transitions()[j].from;
                    out_count[src] -= 1;
                    if out_count[src] == 0 && !dead[src] {
                        next.push(src);
                    }
                }
            }
        }
        frontier = next;
    }

    let empty = dead[full.initial()];
    let mut kept_states = vec![false; n];
    kept_states[full.initial()] = true;
    if empty {
        kept_transitions.iter_mut().for_each(|k| *k = false);
    } else {
        // Keep only what is still reachable from the initial state.
        let mut stack = vec![full.initial()];
        while let Some(s) = stack.pop() {
            for &i in full.outgoing(s) {
                let to = full.transitions()[i].to;
                if kept_transitions[i] && !kept_states[to] {
                    kept_states[to] = true;
                    stack.push(to);
                }
            }
        }
        for (i, t) in full.transitions().iter().enumerate() {
            if !kept_states[t.from] {
                kept_transitions[i] = false;
            }
        }
    }

    PrunedFull {
        base: full,
        kept_states,
        kept_transitions,
        log,
        empty,
    }
}

impl PrunedFull {
    pub fn base(&self) -> &FullEnactedSystem {
        &self.base
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_kept_state(&self, s: usize) -> bool {
        self.kept_states[s]
    }

    pub fn is_kept_transition(&self, i: usize) -> bool {
        self.kept_transitions[i]
    }

    /// Kept full-state ids in increasing order.
    pub fn kept_states(&self) -> Vec<usize> {
        (0..self.kept_states.len()).filter(|&s| self.kept_states[s]).collect()
    }

    pub fn kept_transitions(&self) -> impl Iterator<Item = (usize, &IndexedTransition)> + '_ {
        self.base
            .transitions()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.kept_transitions[*i])
    }

    /// Kept transitions leaving full state `s`.
    pub fn kept_outgoing(&self, s: usize) -> impl Iterator<Item = &IndexedTransition> + '_ {
        self.base
            .outgoing(s)
            .iter()
            .filter(|&&i| self.kept_transitions[i])
            .map(|&i| &self.base.transitions()[i])
    }

    pub fn removal_log(&self) -> &[Removal] {
        &self.log
    }

    pub fn rounds(&self) -> usize {
        self.log.iter().map(|r| r.round).max().unwrap_or(0)
    }

    /// Every kept request-delegation pair has all its nondeterministic
    /// outcomes kept, and every kept state (bar the empty sentinel) has a
    /// kept outgoing transition.
    pub fn closure_holds(&self) -> bool {
        let base = &self.base;
        for (i, t) in base.transitions().iter().enumerate() {
            if !self.kept_transitions[i] {
                continue;
            }
            if !self.kept_states[t.from] || !self.kept_states[t.to] {
                return false;
            }
            let key = group_key(base, t);
            for &j in base.outgoing(t.from) {
                let u = &base.transitions()[j];
                if group_key(base, u) == key && (!self.kept_transitions[j] || !self.kept_states[u.to]) {
                    return false;
                }
            }
        }
        if self.empty {
            return self.kept_states().len() == 1 && self.kept_transitions().next().is_none();
        }
        self.kept_states().into_iter().all(|s| self.kept_outgoing(s).next().is_some())
    }
}

/// Drops delegation indexes from the kept transitions. State `i` of the
/// result is `p.kept_states()[i]`.
pub fn project_indexes(p: &PrunedFull) -> Ltfs {
    let kept = p.kept_states();
    let mut local = vec![usize::MAX; p.base.state_count()];
    for (i, &s) in kept.iter().enumerate() {
        local[s] = i;
    }
    let states = kept.iter().map(|&s| p.base.format_state(s)).collect();
    let transitions = p
        .kept_transitions()
        .map(|(_, t)| (local[t.from], p.base.action_name(t.action).to_string(), local[t.to]))
        .collect::<Vec<_>>();
    Ltfs::from_named(p.base.target().name().to_string(), states, local[p.base.initial()], transitions)
}

/// Safe delegations of the pruned system: for each kept transition
/// `(s, a, s')` with the index dropped, the behaviors that may be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerGenerator {
    states: Vec<usize>,
    delegations: BTreeMap<(usize, ActionId, usize), BTreeSet<usize>>,
}

pub fn extract_controller_generator(p: &PrunedFull) -> Result<ControllerGenerator, ApproxError> {
    if p.is_empty() {
        return Err(ApproxError::EmptyApprox);
    }
    let mut delegations: BTreeMap<_, BTreeSet<usize>> = BTreeMap::new();
    for (_, t) in p.kept_transitions() {
        delegations.entry((t.from, t.action, t.to)).or_default().insert(t.index);
    }
    Ok(ControllerGenerator {
        states: p.kept_states(),
        delegations,
    })
}

impl ControllerGenerator {
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn delegations(&self, from: usize, action: ActionId, to: usize) -> Option<&BTreeSet<usize>> {
        self.delegations.get(&(from, action, to))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, ActionId, usize), &BTreeSet<usize>)> {
        self.delegations.iter()
    }

    pub fn len(&self) -> usize {
        self.delegations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delegations.is_empty()
    }
}

/// Every intermediate product of an approximation run.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pruned: PrunedFull,
    projected: Ltfs,
    kept: Vec<usize>,
    partition: Partition,
    approximation: Ltfs,
}

pub fn synthesize(sys: &SystemSpec, target: &Ltfs) -> Synthesis {
    synthesize_with(sys, target, Materialization::Reachable)
}

pub fn synthesize_with(sys: &SystemSpec, target: &Ltfs, materialization: Materialization) -> Synthesis {
    let enacted = EnactedSystem::build(sys, materialization);
    let full = FullEnactedSystem::build(enacted, target.clone());
    let pruned = prune_fixpoint(full);
    let projected = project_indexes(&pruned);
    let partition = bisim_partition(&projected);
    let approximation = quotient(&projected, &partition).rename(format!("{}_approx", target.name()));
    Synthesis {
        kept: pruned.kept_states(),
        pruned,
        projected,
        partition,
        approximation,
    }
}

impl Synthesis {
    pub fn pruned(&self) -> &PrunedFull {
        &self.pruned
    }

    pub fn projected(&self) -> &Ltfs {
        &self.projected
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn approximation(&self) -> &Ltfs {
        &self.approximation
    }

    pub fn into_approximation(self) -> Ltfs {
        self.approximation
    }

    pub fn generator(&self) -> Result<ControllerGenerator, ApproxError> {
        extract_controller_generator(&self.pruned)
    }

    /// Approximation state (quotient block) holding a kept full state.
    pub fn block_of_full(&self, full_state: usize) -> Option<usize> {
        self.kept
            .binary_search(&full_state)
            .ok()
            .map(|local| self.partition.block_of(local))
    }
}

pub fn compute_approx(sys: &SystemSpec, target: &Ltfs) -> Ltfs {
    synthesize(sys, target).into_approximation()
}

pub fn check_exact(sys: &SystemSpec, target: &Ltfs) -> bool {
    sim_equivalent(&compute_approx(sys, target), target)
}
