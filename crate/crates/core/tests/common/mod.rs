//! Shared fixtures, random instance generators and brute-force oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use behcomp::io::{parse_problem, Problem};
use behcomp::model::{validate_behavior, Ltfs, RawBehavior, RawTransition, SystemSpec, TerminalPolicy};

pub const GOLDEN: &str = include_str!("../../fixtures/smarthouse.toml");
pub const GOLDEN_APPROX: &str = include_str!("../../fixtures/smarthouse_approx.toml");

pub fn golden() -> Problem {
    parse_problem(GOLDEN).unwrap()
}

pub fn golden_approx() -> Problem {
    parse_problem(GOLDEN_APPROX).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn b(name: &str, states: &[&str], init: &str, ts: &[(&str, &str, &str)]) -> Ltfs {
    validate_behavior(&RawBehavior::new(name, states, init, ts), TerminalPolicy::Reject).unwrap()
}

pub const ALPHABET: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Random behavior over the first `actions` letters of [`ALPHABET`]: every
/// state gets 1 to 3 outgoing transitions, so none is terminal. With
/// `deterministic`, no state repeats an action.
pub fn random_raw(rng: &mut impl Rng, name: &str, prefix: &str, max_states: usize, actions: usize, deterministic: bool) -> RawBehavior {
    let n = rng.random_range(1..=max_states);
    random_raw_n(rng, name, prefix, n, actions, deterministic)
}

/// [`random_raw`] with exactly `n` states.
pub fn random_raw_n(rng: &mut impl Rng, name: &str, prefix: &str, n: usize, actions: usize, deterministic: bool) -> RawBehavior {
    let states: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let mut transitions = Vec::new();
    for from in &states {
        let out = rng.random_range(1..=3usize.min(if deterministic { actions } else { 3 }));
        let mut used = BTreeSet::new();
        for _ in 0..out {
            let a = rng.random_range(0..actions);
            if deterministic && !used.insert(a) {
                continue;
            }
            let to = &states[rng.random_range(0..n)];
            transitions.push(RawTransition::new(from.clone(), ALPHABET[a], to.clone()));
        }
    }
    RawBehavior {
        name: name.to_string(),
        initial: states[0].clone(),
        states,
        transitions,
    }
}

pub fn random_behavior(rng: &mut impl Rng, name: &str, prefix: &str, max_states: usize, actions: usize, deterministic: bool) -> Ltfs {
    validate_behavior(&random_raw(rng, name, prefix, max_states, actions, deterministic), TerminalPolicy::Reject).unwrap()
}

const PREFIXES: [&str; 6] = ["p", "r", "s", "u", "v", "w"];

pub fn random_system(rng: &mut impl Rng, max_behaviors: usize, max_states: usize, actions: usize, deterministic: bool) -> SystemSpec {
    let n = rng.random_range(1..=max_behaviors);
    let behaviors = (0..n)
        .map(|i| random_behavior(rng, &format!("B{}", i + 1), PREFIXES[i], max_states, actions, deterministic))
        .collect();
    SystemSpec::new(behaviors).unwrap()
}

/// A random instance: system plus a (possibly nondeterministic) target.
pub fn random_instance(
    rng: &mut impl Rng,
    max_behaviors: usize,
    max_states: usize,
    actions: usize,
    deterministic: bool,
) -> (SystemSpec, Ltfs) {
    let sys = random_system(rng, max_behaviors, max_states, actions, deterministic);
    let det = rng.random_bool(0.5);
    let target = random_behavior(rng, "T", "t", max_states, actions, det);
    (sys, target)
}

/// Same model, shuffled declaration order of states and transitions.
pub fn shuffle_declarations(rng: &mut impl Rng, l: &Ltfs) -> Ltfs {
    let mut raw = l.to_raw();
    raw.states.shuffle(rng);
    raw.transitions.shuffle(rng);
    validate_behavior(&raw, TerminalPolicy::Reject).unwrap()
}

/// Behaviors reordered and each behavior (and the target) re-declared in a
/// shuffled order.
pub fn permute_instance(rng: &mut impl Rng, sys: &SystemSpec, target: &Ltfs) -> (SystemSpec, Ltfs) {
    let mut behaviors: Vec<Ltfs> = sys.behaviors().iter().map(|b| shuffle_declarations(rng, b)).collect();
    behaviors.shuffle(rng);
    (SystemSpec::new(behaviors).unwrap(), shuffle_declarations(rng, target))
}

fn succ_by_name<'a>(l: &'a Ltfs, s: usize, action: &'a str) -> impl Iterator<Item = usize> + 'a {
    l.transitions()
        .iter()
        .filter(move |t| t.from == s && l.action_name(t.action) == action)
        .map(|t| t.to)
}

fn is_simulation(a: &Ltfs, b: &Ltfs, rel: &BTreeSet<(usize, usize)>) -> bool {
    rel.iter().all(|&(p, q)| {
        a.transitions().iter().filter(|t| t.from == p).all(|t| {
            let name = a.action_name(t.action);
            succ_by_name(b, q, name).any(|q2| rel.contains(&(t.to, q2)))
        })
    })
}

/// Largest simulation of `a` by `b` by exhaustive relation search: the
/// largest simulation contains every other one, so it is the unique valid
/// relation of maximum cardinality.
pub fn brute_force_simulation(a: &Ltfs, b: &Ltfs) -> BTreeSet<(usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..a.state_count())
        .flat_map(|p| (0..b.state_count()).map(move |q| (p, q)))
        .collect();
    assert!(pairs.len() <= 20, "relation search is exponential");
    let m = pairs.len();
    for size in (0..=m).rev() {
        // Gosper's hack over masks with `size` bits.
        if size == 0 {
            return BTreeSet::new();
        }
        let mut mask: u64 = (1u64 << size) - 1;
        while mask < (1u64 << m) {
            let rel: BTreeSet<(usize, usize)> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| pairs[i]).collect();
            if is_simulation(a, b, &rel) {
                return rel;
            }
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            mask = (((r ^ mask) >> 2) / c) | r;
        }
    }
    BTreeSet::new()
}

/// Every tuple of local states, in lexicographic order.
pub fn all_tuples(sys: &SystemSpec) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for b in sys.behaviors() {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..b.state_count()).map(move |s| {
                    let mut n = t.clone();
                    n.push(s);
                    n
                })
            })
            .collect();
    }
    out
}

/// Outcomes of delegating `action` to behavior `k` (1-based) at `tuple`.
pub fn outcomes(sys: &SystemSpec, tuple: &[usize], k: usize, action: &str) -> Vec<Vec<usize>> {
    succ_by_name(sys.behavior(k), tuple[k - 1], action)
        .map(|s| {
            let mut n = tuple.to_vec();
            n[k - 1] = s;
            n
        })
        .collect()
}

/// Largest relation `R ⊆ T × S` such that every target move from `t` can be
/// delegated to some behavior all of whose outcomes stay in `R`. An exact
/// composition exists iff the initial pair is in it.
pub fn nd_simulation(sys: &SystemSpec, target: &Ltfs) -> BTreeSet<(usize, Vec<usize>)> {
    let tuples = all_tuples(sys);
    let mut rel: BTreeSet<(usize, Vec<usize>)> = (0..target.state_count())
        .flat_map(|t| tuples.iter().map(move |s| (t, s.clone())))
        .collect();
    loop {
        let keep: BTreeSet<(usize, Vec<usize>)> = rel
            .iter()
            .filter(|(t, s)| {
                target.transitions().iter().filter(|tr| tr.from == *t).all(|tr| {
                    let a = target.action_name(tr.action);
                    (1..=sys.len()).any(|k| {
                        let outs = outcomes(sys, s, k, a);
                        !outs.is_empty() && outs.into_iter().all(|o| rel.contains(&(tr.to, o)))
                    })
                })
            })
            .cloned()
            .collect();
        if keep.len() == rel.len() {
            return rel;
        }
        rel = keep;
    }
}

pub fn exact_oracle(sys: &SystemSpec, target: &Ltfs) -> bool {
    nd_simulation(sys, target).contains(&(target.initial(), sys.initial_tuple()))
}

/// Action sequences of length at most `depth` from the initial state.
pub fn language(l: &Ltfs, depth: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut frontier: BTreeMap<Vec<String>, BTreeSet<usize>> = BTreeMap::from([(vec![], BTreeSet::from([l.initial()]))]);
    for _ in 0..=depth {
        let mut next: BTreeMap<Vec<String>, BTreeSet<usize>> = BTreeMap::new();
        for (word, states) in &frontier {
            out.insert(word.clone());
            for &s in states {
                for &i in l.outgoing(s) {
                    let t = l.transition(i);
                    let mut w = word.clone();
                    w.push(l.action_name(t.action).to_string());
                    next.entry(w).or_default().insert(t.to);
                }
            }
        }
        frontier = next;
    }
    out.into_iter().filter(|w| w.len() <= depth).collect()
}

pub fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

/// Random walk of `len` transitions over `l`, as transition indexes.
pub fn random_walk(rng: &mut impl Rng, l: &Ltfs, len: usize) -> Vec<usize> {
    let mut s = l.initial();
    let mut walk = Vec::with_capacity(len);
    for _ in 0..len {
        let out = l.outgoing(s);
        if out.is_empty() {
            break;
        }
        let i = out[rng.random_range(0..out.len())];
        walk.push(i);
        s = l.transition(i).to;
    }
    walk
}

/// No reachable state is terminal. A transition-free model counts as the
/// empty behavior and passes.
pub fn nonterminating(l: &Ltfs) -> bool {
    if l.transitions().is_empty() {
        return true;
    }
    let mut seen = vec![false; l.state_count()];
    let mut stack = vec![l.initial()];
    seen[l.initial()] = true;
    while let Some(s) = stack.pop() {
        if l.outgoing(s).is_empty() {
            return false;
        }
        for &i in l.outgoing(s) {
            let t = l.transition(i).to;
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    true
}
