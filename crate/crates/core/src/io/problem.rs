//! Problem documents (TOML).
//!
//! ```toml
//! [options]
//! fix_terminal = "reject"          # or "loop"
//!
//! [[behavior]]
//! name = "LightDevice"
//! states = ["d0", "d1"]
//! initial = "d0"
//! transitions = [
//!   { from = "d0", action = "lightOn", to = "d1" },
//!   { from = "d1", action = "lightOff", to = "d0" },
//! ]
//!
//! [target]
//! name = "T"
//! states = ["t0", "t1"]
//! initial = "t0"
//! transitions = [ ... ]
//! ```
//!
//! A target with `empty = true` is the empty approximation: one state and no
//! transitions, exempt from the terminal-state check.

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{validate_behavior, Ltfs, ModelError, RawBehavior, RawTransition, SystemSpec, TerminalPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("E_PARSE: {0}")]
    Parse(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: Box<ModelError>,
    },
}

/// A validated problem: available system, target, and the terminal policy
/// they were validated under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub system: SystemSpec,
    pub target: Ltfs,
    pub policy: TerminalPolicy,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    #[serde(default)]
    options: Options,
    #[serde(default)]
    behavior: Vec<BehaviorDoc>,
    target: BehaviorDoc,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Options {
    #[serde(default)]
    fix_terminal: Policy,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Policy {
    #[default]
    Reject,
    Loop,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorDoc {
    name: toml::Spanned<String>,
    states: Vec<String>,
    initial: String,
    #[serde(default)]
    transitions: Vec<TransitionDoc>,
    #[serde(default)]
    empty: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: String,
    action: String,
    to: String,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl BehaviorDoc {
    fn raw(&self) -> RawBehavior {
        RawBehavior {
            name: self.name.get_ref().clone(),
            states: self.states.clone(),
            initial: self.initial.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| RawTransition::new(t.from.clone(), t.action.clone(), t.to.clone()))
                .collect(),
        }
    }

    fn validate(&self, text: &str, what: &str, policy: TerminalPolicy) -> Result<Ltfs, ProblemError> {
        let context = || {
            format!(
                "{what} `{}` (line {})",
                self.name.get_ref(),
                line_of(text, self.name.span().start)
            )
        };
        let raw = self.raw();
        validate_behavior(&raw, policy).map_err(|source| ProblemError::Model {
            context: context(),
            source: Box::new(source),
        })
    }
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    parse_problem_with(text, None)
}

/// Like [`parse_problem`], with `policy` overriding the document's
/// `fix_terminal` option when given.
pub fn parse_problem_with(text: &str, policy: Option<TerminalPolicy>) -> Result<Problem, ProblemError> {
    let doc: Doc = toml::from_str(text).map_err(|e| ProblemError::Parse(e.message().to_string() + &location(text, e.span())))?;
    let policy = policy.unwrap_or(match doc.options.fix_terminal {
        Policy::Reject => TerminalPolicy::Reject,
        Policy::Loop => TerminalPolicy::Loop,
    });
    if doc.behavior.is_empty() {
        return Err(ProblemError::Parse("at least one [[behavior]] is required".into()));
    }
    for (i, b) in doc.behavior.iter().enumerate() {
        if b.empty {
            return Err(ProblemError::Parse(format!(
                "`empty` is only allowed on the target (behavior `{}`)",
                b.name.get_ref()
            )));
        }
        if let Some(first) = doc.behavior[..i].iter().find(|o| o.name.get_ref() == b.name.get_ref()) {
            return Err(ProblemError::Parse(format!(
                "duplicate behavior name `{}` at line {} and line {}",
                b.name.get_ref(),
                line_of(text, first.name.span().start),
                line_of(text, b.name.span().start)
            )));
        }
    }
    let behaviors = doc
        .behavior
        .iter()
        .map(|b| b.validate(text, "behavior", policy))
        .collect::<Result<Vec<_>, _>>()?;
    let system = SystemSpec::new(behaviors).map_err(|source| ProblemError::Model {
        context: "system".into(),
        source: Box::new(source),
    })?;
    let target = if doc.target.empty {
        let t = &doc.target;
        if t.states.len() != 1 || !t.transitions.is_empty() || t.states[0] != t.initial {
            return Err(ProblemError::Parse(
                "an empty target has exactly one state, which is initial, and no transitions".into(),
            ));
        }
        Ltfs::from_named(t.name.get_ref().clone(), t.states.clone(), 0, std::iter::empty())
    } else {
        doc.target.validate(text, "target", policy)?
    };
    Ok(Problem { system, target, policy })
}

fn location(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    span.map(|s| format!(" (line {})", line_of(text, s.start)))
        .unwrap_or_default()
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn write_behavior(out: &mut String, header: &str, b: &Ltfs) {
    let raw = b.to_raw();
    let _ = writeln!(out, "[{header}]");
    let _ = writeln!(out, "name = {}", quote(&raw.name));
    let states: Vec<String> = raw.states.iter().map(|s| quote(s)).collect();
    let _ = writeln!(out, "states = [{}]", states.join(", "));
    let _ = writeln!(out, "initial = {}", quote(&raw.initial));
    if b.is_empty_approximation() {
        let _ = writeln!(out, "empty = true");
    }
    let _ = writeln!(out, "transitions = [");
    for t in &raw.transitions {
        let _ = writeln!(
            out,
            "  {{ from = {}, action = {}, to = {} }},",
            quote(&t.from),
            quote(&t.action),
            quote(&t.to)
        );
    }
    let _ = writeln!(out, "]");
}

/// Renders a problem document that parses back to the same models.
pub fn serialize_problem(system: &SystemSpec, target: &Ltfs, policy: TerminalPolicy) -> String {
    let mut out = String::new();
    let policy = match policy {
        TerminalPolicy::Reject => "reject",
        TerminalPolicy::Loop => "loop",
    };
    let _ = writeln!(out, "[options]\nfix_terminal = \"{policy}\"\n");
    for b in system.behaviors() {
        write_behavior(&mut out, "[behavior]", b);
        out.push('\n');
    }
    write_behavior(&mut out, "target", target);
    out
}
