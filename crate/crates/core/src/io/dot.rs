//! Graphviz renderings. The initial state gets an edge from an invisible
//! `__start` point node.

use std::fmt::Write as _;

use crate::approx::PrunedFull;
use crate::model::Ltfs;
use crate::product::{EnactedSystem, FullEnactedSystem, IndexedTransition};

fn q(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn header(out: &mut String, name: &str, initial: &str) {
    let _ = writeln!(out, "digraph {} {{", q(name));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  __start [shape=point, style=invis];");
    let _ = writeln!(out, "  __start -> {} [arrowhead=none];", q(initial));
}

pub fn ltfs_to_dot(l: &Ltfs) -> String {
    let mut out = String::new();
    header(&mut out, l.name(), l.state_name(l.initial()));
    for s in l.states() {
        let _ = writeln!(out, "  {};", q(s));
    }
    for t in l.transitions() {
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            q(l.state_name(t.from)),
            q(l.state_name(t.to)),
            q(l.action_name(t.action))
        );
    }
    out.push_str("}\n");
    out
}

fn indexed_edges(
    out: &mut String,
    transitions: impl Iterator<Item = (IndexedTransition, bool)>,
    name: impl Fn(usize) -> String,
    action: impl Fn(usize) -> String,
) {
    for (t, dashed) in transitions {
        let style = if dashed { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{style}];",
            q(&name(t.from)),
            q(&name(t.to)),
            q(&format!("{},{}", action(t.action), t.index))
        );
    }
}

pub fn enacted_to_dot(es: &EnactedSystem) -> String {
    let mut out = String::new();
    header(&mut out, "enacted", &es.format_state(es.initial()));
    for s in 0..es.state_count() {
        let _ = writeln!(out, "  {};", q(&es.format_state(s)));
    }
    indexed_edges(
        &mut out,
        es.transitions().iter().map(|&t| (t, false)),
        |s| es.format_state(s),
        |a| es.action_name(a).to_string(),
    );
    out.push_str("}\n");
    out
}

pub fn full_to_dot(full: &FullEnactedSystem) -> String {
    let mut out = String::new();
    header(&mut out, "full", &full.format_state(full.initial()));
    for s in 0..full.state_count() {
        let _ = writeln!(out, "  {};", q(&full.format_state(s)));
    }
    indexed_edges(
        &mut out,
        full.transitions().iter().map(|&t| (t, false)),
        |s| full.format_state(s),
        |a| full.action_name(a).to_string(),
    );
    out.push_str("}\n");
    out
}

/// Kept part of a pruned full system; with `show_removed`, removed states and
/// transitions are drawn dashed.
pub fn pruned_to_dot(p: &PrunedFull, show_removed: bool) -> String {
    let full = p.base();
    let mut out = String::new();
    header(&mut out, "pruned", &full.format_state(full.initial()));
    for s in 0..full.state_count() {
        if p.is_kept_state(s) {
            let _ = writeln!(out, "  {};", q(&full.format_state(s)));
        } else if show_removed {
            let _ = writeln!(out, "  {} [style=dashed];", q(&full.format_state(s)));
        }
    }
    indexed_edges(
        &mut out,
        full.transitions()
            .iter()
            .enumerate()
            .filter(|&(i, _)| show_removed || p.is_kept_transition(i))
            .map(|(i, &t)| (t, !p.is_kept_transition(i))),
        |s| full.format_state(s),
        |a| full.action_name(a).to_string(),
    );
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_behavior, RawBehavior, TerminalPolicy};

    #[test]
    fn light_device_graph() {
        let l = validate_behavior(
            &RawBehavior::new("L", &["d0", "d1"], "d0", &[("d0", "lightOn", "d1"), ("d1", "lightOff", "d0")]),
            TerminalPolicy::Reject,
        )
        .unwrap();
        let dot = ltfs_to_dot(&l);
        assert!(dot.starts_with("digraph \"L\" {"));
        assert!(dot.contains("__start -> \"d0\""));
        assert!(dot.contains("\"d0\" -> \"d1\" [label=\"lightOn\"];"));
        assert!(dot.contains("\"d1\" -> \"d0\" [label=\"lightOff\"];"));
        assert_eq!(dot.matches("[label=").count(), 2);
    }

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(q("a\"b"), "\"a\\\"b\"");
    }
}
