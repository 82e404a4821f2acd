mod common;

use std::collections::BTreeSet;

use behcomp::model::{is_deterministic, validate_behavior, ModelError, RawBehavior, SystemSpec, TerminalPolicy};
use behcomp::product::{enacted_system, full_enacted_system, EnactedSystem, Materialization};
use proptest::prelude::*;

use common::*;

#[test]
fn golden_models_validate() {
    let p = golden();
    assert_eq!(p.system.len(), 4);
    assert_eq!(p.target.state_count(), 5);
    assert_eq!(p.target.transitions().len(), 8);
    assert!(!p.system.behavior(1).is_deterministic());
    for k in 2..=4 {
        assert!(p.system.behavior(k).is_deterministic());
    }
    assert!(is_deterministic(p.system.behavior(2)));
}

#[test]
fn bad_initial_and_unknown_state() {
    let raw = RawBehavior::new("X", &["x"], "y", &[("x", "a", "x")]);
    assert!(matches!(
        validate_behavior(&raw, TerminalPolicy::Reject),
        Err(ModelError::BadInitial { .. })
    ));
    let raw = RawBehavior::new("X", &["x"], "x", &[("x", "a", "z")]);
    assert!(matches!(
        validate_behavior(&raw, TerminalPolicy::Reject),
        Err(ModelError::UnknownState { .. })
    ));
}

#[test]
fn golden_enacted_system_shape() {
    let p = golden();
    let es = enacted_system(&p.system);
    assert_eq!(es.full_cardinality(), 4 * 3 * 3 * 2);
    // a3 is reachable through the nondeterministic web.
    assert!(es.state_of(&[3, 0, 0, 0]).is_some());
    let full = full_enacted_system(&es, &p.target);
    assert_eq!(full.format_state(full.initial()), "((a0,b0,c0,d0),t0)");
    assert!(full.transitions().iter().all(|t| (1..=4).contains(&t.index)));
}

fn arb_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_round_trip_is_identity(seed in arb_seed()) {
        let mut rng = rng(seed);
        let l = random_behavior(&mut rng, "L", "s", 6, 4, false);
        let again = validate_behavior(&l.to_raw(), TerminalPolicy::Reject).unwrap();
        prop_assert_eq!(again, l);
    }

    #[test]
    fn determinism_matches_brute_force(seed in arb_seed()) {
        let mut rng = rng(seed);
        let l = random_behavior(&mut rng, "L", "s", 5, 3, false);
        let mut seen = BTreeSet::new();
        let brute = l.transitions().iter().all(|t| seen.insert((t.from, t.action)));
        prop_assert_eq!(l.is_deterministic(), brute);
    }

    #[test]
    fn tuples_round_trip(seed in arb_seed()) {
        let mut rng = rng(seed);
        let sys = random_system(&mut rng, 3, 4, 3, false);
        for t in all_tuples(&sys) {
            prop_assert_eq!(sys.parse_tuple(&sys.format_tuple(&t)), Some(t));
        }
    }

    /// Every enacted transition is a move of exactly the indexed behavior and
    /// every behavior move from a reachable tuple appears.
    #[test]
    fn enacted_transitions_match_behaviors(seed in arb_seed()) {
        let mut rng = rng(seed);
        let sys = random_system(&mut rng, 3, 4, 3, false);
        for mat in [Materialization::Reachable, Materialization::Full] {
            let es = EnactedSystem::build(&sys, mat);
            let mut listed = BTreeSet::new();
            for t in es.transitions() {
                let (from, to) = (es.tuple(t.from), es.tuple(t.to));
                for j in 0..sys.len() {
                    if j + 1 != t.index {
                        prop_assert_eq!(from[j], to[j]);
                    }
                }
                listed.insert((t.from, es.action_name(t.action).to_string(), t.index, t.to));
            }
            let mut expected = BTreeSet::new();
            for s in 0..es.state_count() {
                let tuple = es.tuple(s).to_vec();
                for k in 1..=sys.len() {
                    let b = sys.behavior(k);
                    for tr in b.transitions().iter().filter(|tr| tr.from == tuple[k - 1]) {
                        let mut next = tuple.clone();
                        next[k - 1] = tr.to;
                        let to = es.state_of(&next).expect("successor interned");
                        expected.insert((s, b.action_name(tr.action).to_string(), k, to));
                    }
                }
            }
            prop_assert_eq!(listed, expected);
            if mat == Materialization::Full {
                prop_assert_eq!(es.state_count() as u128, es.full_cardinality());
            }
        }
    }

    /// Full-system moves are exactly the synchronized target/enacted pairs.
    #[test]
    fn full_system_synchronizes(seed in arb_seed()) {
        let mut rng = rng(seed);
        let (sys, target) = random_instance(&mut rng, 2, 3, 3, false);
        let es = enacted_system(&sys);
        let full = full_enacted_system(&es, &target);
        for s in 0..full.state_count() {
            let mut listed = BTreeSet::new();
            for &i in full.outgoing(s) {
                let t = full.transitions()[i];
                listed.insert((full.action_name(t.action).to_string(), t.index, full.sys(t.to), full.tgt(t.to)));
            }
            let mut expected = BTreeSet::new();
            for tt in target.transitions().iter().filter(|tt| tt.from == full.tgt(s)) {
                for et in es.transitions().iter().filter(|et| et.from == full.sys(s)) {
                    if es.action_name(et.action) == target.action_name(tt.action) {
                        expected.insert((target.action_name(tt.action).to_string(), et.index, et.to, tt.to));
                    }
                }
            }
            prop_assert_eq!(listed, expected);
        }
    }
}

#[test]
fn system_rejects_duplicates_and_empty() {
    assert_eq!(SystemSpec::new(vec![]), Err(ModelError::EmptySystem));
    let x = b("X", &["x"], "x", &[("x", "a", "x")]);
    assert!(matches!(
        SystemSpec::new(vec![x.clone(), x]),
        Err(ModelError::DuplicateBehavior(_))
    ));
}
