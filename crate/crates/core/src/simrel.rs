//! Largest simulation relations, simulation equivalence and bisimulation
//! quotients.

use std::collections::HashMap;

use crate::model::{ActionId, Ltfs, StateId, Transition};

/// The largest simulation of `left` by `right`: `(p, q)` is a member iff `q`
/// can match every move of `p`, hereditarily.
#[derive(Debug, Clone)]
pub struct SimulationRelation<'a> {
    left: &'a Ltfs,
    right: &'a Ltfs,
    /// `left` action id -> `right` action id with the same label.
    action_map: Vec<Option<ActionId>>,
    member: Vec<bool>,
}

impl<'a> SimulationRelation<'a> {
    pub fn left(&self) -> &'a Ltfs {
        self.left
    }

    pub fn right(&self) -> &'a Ltfs {
        self.right
    }

    pub fn contains(&self, p: StateId, q: StateId) -> bool {
        self.member[p * self.right.state_count() + q]
    }

    pub fn contains_named(&self, p: &str, q: &str) -> bool {
        match (self.left.state_id(p), self.right.state_id(q)) {
            (Some(p), Some(q)) => self.contains(p, q),
            _ => false,
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        let nr = self.right.state_count();
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i / nr, i % nr))
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `q` matches every move of `p` within the current relation.
    fn matches(&self, p: StateId, q: StateId) -> bool {
        self.left.outgoing(p).iter().all(|&i| {
            let t = self.left.transition(i);
            let Some(a) = self.action_map[t.action] else {
                return false;
            };
            self.right.successors(q, a).any(|q2| self.contains(t.to, q2))
        })
    }

    /// Number of member pairs that violate the simulation condition. Zero for
    /// every relation returned by [`largest_simulation`].
    pub fn refinement_pass(&self) -> usize {
        self.pairs().filter(|&(p, q)| !self.matches(p, q)).count()
    }
}

pub fn largest_simulation<'a>(small: &'a Ltfs, big: &'a Ltfs) -> SimulationRelation<'a> {
    let (ns, nb) = (small.state_count(), big.state_count());
    let action_map = small.actions().iter().map(|a| big.action_id(a)).collect();
    let mut rel = SimulationRelation {
        left: small,
        right: big,
        action_map,
        member: vec![true; ns * nb],
    };
    let preds = |l: &Ltfs| {
        let mut p = vec![Vec::new(); l.state_count()];
        for t in l.transitions() {
            p[t.to].push(t.from);
        }
        for v in &mut p {
            v.sort_unstable();
            v.dedup();
        }
        p
    };
    let (small_pred, big_pred) = (preds(small), preds(big));

    let mut queued = vec![true; ns * nb];
    let mut work: Vec<(StateId, StateId)> = (0..ns).flat_map(|p| (0..nb).map(move |q| (p, q))).rev().collect();
    while let Some((p, q)) = work.pop() {
        queued[p * nb + q] = false;
        if !rel.member[p * nb + q] || rel.matches(p, q) {
            continue;
        }
        rel.member[p * nb + q] = false;
        for &pp in &small_pred[p] {
            for &qq in &big_pred[q] {
                let i = pp * nb + qq;
                if rel.member[i] && !queued[i] {
                    queued[i] = true;
                    work.push((pp, qq));
                }
            }
        }
    }
    rel
}

/// `big` simulates `small` from their initial states.
pub fn simulates(small: &Ltfs, big: &Ltfs) -> bool {
    largest_simulation(small, big).contains(small.initial(), big.initial())
}

pub fn sim_equivalent(a: &Ltfs, b: &Ltfs) -> bool {
    simulates(a, b) && simulates(b, a)
}

/// Strictly simulated: `small ⪯ big` but not the converse.
pub fn strictly_simulates(small: &Ltfs, big: &Ltfs) -> bool {
    simulates(small, big) && !simulates(big, small)
}

/// Coarsest bisimulation partition of one Ltfs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<StateId>>,
}

impl Partition {
    pub fn block_of(&self, s: StateId) -> usize {
        self.block_of[s]
    }

    pub fn blocks(&self) -> &[Vec<StateId>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Minimal state id of a block.
    pub fn representative(&self, block: usize) -> StateId {
        self.blocks[block][0]
    }
}

/// Signature refinement: split on `(action, successor block)` sets until the
/// number of blocks stops growing.
pub fn bisim_partition(b: &Ltfs) -> Partition {
    let n = b.state_count();
    let mut block_of = vec![0usize; n];
    let mut count = 1;
    loop {
        let mut ids: HashMap<(usize, Vec<(ActionId, usize)>), usize> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for s in 0..n {
            let mut sig: Vec<(ActionId, usize)> = b
                .outgoing(s)
                .iter()
                .map(|&i| {
                    let t = b.transition(i);
                    (t.action, block_of[t.to])
                })
                .collect();
            sig.sort_unstable();
            sig.dedup();
            let fresh = ids.len();
            next.push(*ids.entry((block_of[s], sig)).or_insert(fresh));
        }
        let new_count = ids.len();
        block_of = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut blocks = vec![Vec::new(); count];
    for (s, &k) in block_of.iter().enumerate() {
        blocks[k].push(s);
    }
    Partition { block_of, blocks }
}

/// One state `q<k>` per block, transitions lifted blockwise.
pub fn quotient(b: &Ltfs, p: &Partition) -> Ltfs {
    let states = (0..p.block_count()).map(|k| format!("q{k}")).collect();
    let transitions = b
        .transitions()
        .iter()
        .map(|t| Transition {
            from: p.block_of(t.from),
            action: t.action,
            to: p.block_of(t.to),
        })
        .collect();
    Ltfs::from_parts(
        b.name().to_string(),
        states,
        b.actions().to_vec(),
        p.block_of(b.initial()),
        transitions,
    )
}

/// `quotient(b, bisim_partition(b))`.
pub fn minimize(b: &Ltfs) -> Ltfs {
    quotient(b, &bisim_partition(b))
}
