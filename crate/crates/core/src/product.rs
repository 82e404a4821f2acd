//! Enacted system (asynchronous product of the available behaviors) and full
//! enacted system (synchronous product of the enacted system with a target).

use std::collections::{HashMap, VecDeque};

use crate::model::{ActionId, Ltfs, StateId, SystemSpec};

/// Whether the enacted system holds only the states reachable from the
/// initial tuple or the whole Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Materialization {
    #[default]
    Reachable,
    Full,
}

/// A product transition. `index` is the 1-based behavior that acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexedTransition {
    pub from: usize,
    pub action: ActionId,
    pub index: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct EnactedSystem {
    system: SystemSpec,
    tuples: Vec<Vec<StateId>>,
    ids: HashMap<Vec<StateId>, usize>,
    transitions: Vec<IndexedTransition>,
    out: Vec<Vec<usize>>,
    materialization: Materialization,
}

pub fn enacted_system(sys: &SystemSpec) -> EnactedSystem {
    EnactedSystem::build(sys, Materialization::Reachable)
}

impl EnactedSystem {
    pub fn build(sys: &SystemSpec, materialization: Materialization) -> Self {
        let mut es = EnactedSystem {
            system: sys.clone(),
            tuples: Vec::new(),
            ids: HashMap::new(),
            transitions: Vec::new(),
            out: Vec::new(),
            materialization,
        };
        let initial = sys.initial_tuple();
        es.intern(initial);
        if materialization == Materialization::Full {
            let sizes: Vec<usize> = sys.behaviors().iter().map(Ltfs::state_count).collect();
            let mut tuple = vec![0; sizes.len()];
            'outer: loop {
                es.intern(tuple.clone());
                for i in (0..tuple.len()).rev() {
                    tuple[i] += 1;
                    if tuple[i] < sizes[i] {
                        continue 'outer;
                    }
                    tuple[i] = 0;
                }
                break;
            }
        }

        // BFS; in full mode every state is already interned so this just
        // enumerates transitions in id order.
        let mut next = 0;
        while next < es.tuples.len() {
            let src = next;
            next += 1;
            let tuple = es.tuples[src].clone();
            for k in 1..=sys.len() {
                let b = sys.behavior(k);
                for &ti in b.outgoing(tuple[k - 1]) {
                    let t = b.transition(ti);
                    let mut succ = tuple.clone();
                    succ[k - 1] = t.to;
                    let to = es.intern(succ);
                    es.transitions.push(IndexedTransition {
                        from: src,
                        action: sys.global_action(k, t.action),
                        index: k,
                        to,
                    });
                }
            }
        }
        es.out = vec![Vec::new(); es.tuples.len()];
        for (i, t) in es.transitions.iter().enumerate() {
            es.out[t.from].push(i);
        }
        es
    }

    fn intern(&mut self, tuple: Vec<StateId>) -> usize {
        if let Some(&id) = self.ids.get(&tuple) {
            return id;
        }
        let id = self.tuples.len();
        self.ids.insert(tuple.clone(), id);
        self.tuples.push(tuple);
        id
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn materialization(&self) -> Materialization {
        self.materialization
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.tuples.len()
    }

    /// Size of the full Cartesian state space, saturating.
    pub fn full_cardinality(&self) -> u128 {
        self.system
            .behaviors()
            .iter()
            .fold(1u128, |acc, b| acc.saturating_mul(b.state_count() as u128))
    }

    pub fn tuple(&self, s: usize) -> &[StateId] {
        &self.tuples[s]
    }

    pub fn state_of(&self, tuple: &[StateId]) -> Option<usize> {
        self.ids.get(tuple).copied()
    }

    pub fn transitions(&self) -> &[IndexedTransition] {
        &self.transitions
    }

    pub fn outgoing(&self, s: usize) -> &[usize] {
        &self.out[s]
    }

    pub fn format_state(&self, s: usize) -> String {
        self.system.format_tuple(&self.tuples[s])
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.system.alphabet()[a]
    }
}

/// Synchronous product of an enacted system and a target.
#[derive(Debug, Clone)]
pub struct FullEnactedSystem {
    enacted: EnactedSystem,
    target: Ltfs,
    /// `(enacted state, target state)` per full state.
    pairs: Vec<(usize, StateId)>,
    ids: HashMap<(usize, StateId), usize>,
    transitions: Vec<IndexedTransition>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

pub fn full_enacted_system(es: &EnactedSystem, target: &Ltfs) -> FullEnactedSystem {
    FullEnactedSystem::build(es.clone(), target.clone())
}

impl FullEnactedSystem {
    pub fn build(enacted: EnactedSystem, target: Ltfs) -> Self {
        // Target action -> alphabet id; actions no behavior offers never match.
        let action_map: Vec<Option<ActionId>> = target
            .actions()
            .iter()
            .map(|a| enacted.system().action_id(a))
            .collect();
        let mut full = FullEnactedSystem {
            pairs: Vec::new(),
            ids: HashMap::new(),
            transitions: Vec::new(),
            out: Vec::new(),
            inc: Vec::new(),
            enacted,
            target,
        };
        full.intern((full.enacted.initial(), full.target.initial()));
        let mut queue = VecDeque::from([0usize]);
        while let Some(src) = queue.pop_front() {
            let (s, t) = full.pairs[src];
            let target_out = full.target.outgoing(t).to_vec();
            for ti in target_out {
                let tt = full.target.transition(ti);
                let Some(action) = action_map[tt.action] else {
                    continue;
                };
                let enacted_out = full.enacted.outgoing(s).to_vec();
                for ei in enacted_out {
                    let et = full.enacted.transitions()[ei];
                    if et.action != action {
                        continue;
                    }
                    let before = full.pairs.len();
                    let to = full.intern((et.to, tt.to));
                    if to == before {
                        queue.push_back(to);
                    }
                    full.transitions.push(IndexedTransition {
                        from: src,
                        action,
                        index: et.index,
                        to,
                    });
                }
            }
        }
        let n = full.pairs.len();
        full.out = vec![Vec::new(); n];
        full.inc = vec![Vec::new(); n];
        for (i, t) in full.transitions.iter().enumerate() {
            full.out[t.from].push(i);
            full.inc[t.to].push(i);
        }
        full
    }

    fn intern(&mut self, pair: (usize, StateId)) -> usize {
        if let Some(&id) = self.ids.get(&pair) {
            return id;
        }
        let id = self.pairs.len();
        self.ids.insert(pair, id);
        self.pairs.push(pair);
        id
    }

    pub fn enacted(&self) -> &EnactedSystem {
        &self.enacted
    }

    pub fn system(&self) -> &SystemSpec {
        self.enacted.system()
    }

    pub fn target(&self) -> &Ltfs {
        &self.target
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.pairs.len()
    }

    /// Enacted-system component of a full state.
    pub fn sys(&self, s: usize) -> usize {
        self.pairs[s].0
    }

    /// Target component of a full state.
    pub fn tgt(&self, s: usize) -> StateId {
        self.pairs[s].1
    }

    pub fn state_of(&self, sys: usize, tgt: StateId) -> Option<usize> {
        self.ids.get(&(sys, tgt)).copied()
    }

    pub fn transitions(&self) -> &[IndexedTransition] {
        &self.transitions
    }

    pub fn outgoing(&self, s: usize) -> &[usize] {
        &self.out[s]
    }

    pub fn incoming(&self, s: usize) -> &[usize] {
        &self.inc[s]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        self.enacted.action_name(a)
    }

    /// `((a0,b0,...),t0)`
    pub fn format_state(&self, s: usize) -> String {
        let (e, t) = self.pairs[s];
        format!(
            "({},{})",
            self.enacted.format_state(e),
            self.target.state_name(t)
        )
    }
}
