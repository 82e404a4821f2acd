//! ISPL export of the coalition safety game, for the MCMAS model checker.
//!
//! Layout: an `Environment` agent (observables `sch` and `act`, actions =
//! behavior names), one agent per behavior (state variable with an extra
//! `err` value, `go_<state>` actions plus `skip`), a target agent `T` whose
//! states and actions are target transitions `src_action_dst`, an `Error`
//! evaluation, the initial state, the `{T, Environment}` coalition and the
//! formula `<Coalition> G (!Error);`.
//!
//! Actions are lowercased; the idle action becomes `idle`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Ltfs, SystemSpec, IDLE_ACTION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsplError {
    #[error("E_NAME_CLASH: `{0}` and `{1}` map to the same identifier `{2}`")]
    NameClash(String, String, String),
    #[error("`{0}` is not a valid ISPL identifier")]
    InvalidIdentifier(String),
    #[error("target `{0}` has no transitions to encode")]
    EmptyTarget(String),
}

const RESERVED_AGENTS: [&str; 2] = ["Environment", "T"];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_ident(s: &str) -> Result<(), IsplError> {
    if is_ident(s) {
        Ok(())
    } else {
        Err(IsplError::InvalidIdentifier(s.to_string()))
    }
}

fn mangle_action(a: &str) -> String {
    if a == IDLE_ACTION {
        "idle".to_string()
    } else {
        a.to_lowercase()
    }
}

/// Injective renaming table; reports the first collision.
#[derive(Default)]
struct Names {
    by_ident: HashMap<String, String>,
}

impl Names {
    fn claim(&mut self, original: &str, ident: String) -> Result<String, IsplError> {
        check_ident(&ident)?;
        match self.by_ident.get(&ident) {
            Some(o) if o != original => Err(IsplError::NameClash(o.clone(), original.to_string(), ident)),
            _ => {
                self.by_ident.insert(ident.clone(), original.to_string());
                Ok(ident)
            }
        }
    }
}

fn list(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

pub fn export_ispl(sys: &SystemSpec, target: &Ltfs) -> Result<String, IsplError> {
    if target.transitions().is_empty() {
        return Err(IsplError::EmptyTarget(target.name().to_string()));
    }

    // Action values of Environment.act, shared with `start`.
    let mut act_names = Names::default();
    act_names.claim("reserved `start`", "start".into())?;
    let mut act: BTreeMap<&str, String> = BTreeMap::new();
    let mut act_order: Vec<String> = Vec::new();
    for a in sys.alphabet().iter().chain(target.actions()) {
        if !act.contains_key(a.as_str()) {
            let m = act_names.claim(a, mangle_action(a))?;
            act.insert(a, m.clone());
            act_order.push(m);
        }
    }
    act_order.push("start".into());

    // Agent names, shared with the `start` value of `sch`.
    let mut agent_names = Names::default();
    for r in RESERVED_AGENTS {
        agent_names.claim(&format!("reserved `{r}`"), r.to_string())?;
    }
    agent_names.claim("reserved `start`", "start".into())?;
    for b in sys.behaviors() {
        agent_names.claim(b.name(), b.name().to_string())?;
        let mut state_names = Names::default();
        state_names.claim("reserved `err`", "err".into())?;
        for s in b.states() {
            state_names.claim(s, s.clone())?;
        }
    }

    // Target transition identifiers.
    let mut triple_names = Names::default();
    let mut triples = Vec::with_capacity(target.transitions().len());
    for (i, t) in target.transitions().iter().enumerate() {
        let id = format!(
            "{}_{}_{}",
            target.state_name(t.from),
            act[target.action_name(t.action)],
            target.state_name(t.to)
        );
        triples.push(triple_names.claim(&target.format_transition(i), id)?);
    }

    let mut out = String::new();
    let names: Vec<String> = sys.behaviors().iter().map(|b| b.name().to_string()).collect();
    let mut sch = names.clone();
    sch.push("start".into());

    let _ = writeln!(out, "Semantics = SA;");
    let _ = writeln!(out, "Agent Environment");
    let _ = writeln!(out, "    Obsvars:");
    let _ = writeln!(out, "        sch : {};", list(&sch));
    let _ = writeln!(out, "        act : {};", list(&act_order));
    let _ = writeln!(out, "    end Obsvars");
    let _ = writeln!(out, "    Actions = {};", list(&sch));
    let _ = writeln!(out, "    Protocol:");
    let _ = writeln!(out, "        act = start : {{start}};");
    let _ = writeln!(out, "        Other : {};", list(&names));
    let _ = writeln!(out, "    end Protocol");
    let _ = writeln!(out, "    Evolution:");
    for n in &names {
        let _ = writeln!(out, "        sch = {n} if Action = {n};");
    }
    for (i, t) in target.transitions().iter().enumerate() {
        let _ = writeln!(
            out,
            "        act = {} if T.Action = {};",
            act[target.action_name(t.action)],
            triples[i]
        );
    }
    let _ = writeln!(out, "    end Evolution");
    let _ = writeln!(out, "end Agent");

    for b in sys.behaviors() {
        let name = b.name();
        let mut states: Vec<String> = b.states().to_vec();
        states.push("err".into());
        let mut actions: Vec<String> = b.states().iter().map(|s| format!("go_{s}")).collect();
        actions.push("skip".into());
        let _ = writeln!(out);
        let _ = writeln!(out, "Agent {name}");
        let _ = writeln!(out, "    Vars:");
        let _ = writeln!(out, "        state : {};", list(&states));
        let _ = writeln!(out, "    end Vars");
        let _ = writeln!(out, "    Actions = {};", list(&actions));
        let _ = writeln!(out, "    Protocol:");
        // (state, action) -> successors, in transition order.
        let mut groups: Vec<((usize, usize), Vec<String>)> = Vec::new();
        for t in b.transitions() {
            let go = format!("go_{}", b.state_name(t.to));
            match groups.iter_mut().find(|(k, _)| *k == (t.from, t.action)) {
                Some((_, v)) => {
                    if !v.contains(&go) {
                        v.push(go)
                    }
                }
                None => groups.push(((t.from, t.action), vec![go])),
            }
        }
        for ((s, a), gos) in &groups {
            let _ = writeln!(
                out,
                "        state = {} and Environment.act = {} : {};",
                b.state_name(*s),
                act[b.action_name(*a)],
                list(gos)
            );
        }
        let _ = writeln!(out, "        Other : {{skip}};");
        let _ = writeln!(out, "    end Protocol");
        let _ = writeln!(out, "    Evolution:");
        let _ = writeln!(out, "        state = err if Action = skip and Environment.Action = {name};");
        for s in b.states() {
            let _ = writeln!(out, "        state = {s} if Action = go_{s} and Environment.Action = {name};");
        }
        let _ = writeln!(out, "    end Evolution");
        let _ = writeln!(out, "end Agent");
    }

    let leaving = |s: usize| -> Vec<String> { target.outgoing(s).iter().map(|&i| triples[i].clone()).collect() };
    let _ = writeln!(out);
    let _ = writeln!(out, "Agent T");
    let _ = writeln!(out, "    Vars:");
    let _ = writeln!(out, "        state : {};", list(&triples));
    let _ = writeln!(out, "    end Vars");
    let _ = writeln!(out, "    Actions = {};", list(&triples));
    let _ = writeln!(out, "    Protocol:");
    let _ = writeln!(out, "        Environment.act = start : {};", list(&leaving(target.initial())));
    for (i, t) in target.transitions().iter().enumerate() {
        let next = leaving(t.to);
        if !next.is_empty() {
            let _ = writeln!(
                out,
                "        state = {} and Environment.act = {} : {};",
                triples[i],
                act[target.action_name(t.action)],
                list(&next)
            );
        }
    }
    let _ = writeln!(out, "    end Protocol");
    let _ = writeln!(out, "    Evolution:");
    for id in &triples {
        let _ = writeln!(out, "        state = {id} if Action = {id};");
    }
    let _ = writeln!(out, "    end Evolution");
    let _ = writeln!(out, "end Agent");

    let errs: Vec<String> = names.iter().map(|n| format!("{n}.state = err")).collect();
    let _ = writeln!(out);
    let _ = writeln!(out, "Evaluation");
    let _ = writeln!(out, "    Error if {};", errs.join(" or "));
    let _ = writeln!(out, "end Evaluation");

    let mut init: Vec<String> = sys
        .behaviors()
        .iter()
        .map(|b| format!("{}.state = {}", b.name(), b.state_name(b.initial())))
        .collect();
    // The target starts on some transition leaving its initial state; the
    // `start` round lets it pick the actual first request.
    let first = target.outgoing(target.initial()).first().copied().unwrap_or(0);
    init.push(format!("T.state = {}", triples[first]));
    init.push("Environment.act = start".into());
    init.push("Environment.sch = start".into());
    let _ = writeln!(out);
    let _ = writeln!(out, "InitStates");
    let _ = writeln!(out, "    {};", init.join(" and "));
    let _ = writeln!(out, "end InitStates");
    let _ = writeln!(out);
    let _ = writeln!(out, "Groups");
    let _ = writeln!(out, "    Coalition = {{T, Environment}};");
    let _ = writeln!(out, "end Groups");
    let _ = writeln!(out);
    let _ = writeln!(out, "Formulae");
    let _ = writeln!(out, "    <Coalition> G (!Error);");
    let _ = writeln!(out, "end Formulae");
    Ok(out)
}

/// Sections found by [`check_ispl_structure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsplOutline {
    /// Agent names in order of appearance.
    pub agents: Vec<String>,
    /// Names in the `Error` disjunction.
    pub error_agents: Vec<String>,
}

/// Structural grammar check: header, agents with their sections, then the
/// Evaluation, InitStates, Groups and Formulae blocks, in that order.
pub fn check_ispl_structure(text: &str) -> Result<IsplOutline, String> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split("--").next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0;
    let err = |n: usize, what: &str| format!("line {n}: {what}");
    let next = |pos: &mut usize| -> Option<(usize, &str)> {
        let r = lines.get(*pos).copied();
        *pos += 1;
        r
    };

    match next(&mut pos) {
        Some((_, "Semantics = SA;")) => {}
        Some((n, _)) => return Err(err(n, "expected `Semantics = SA;`")),
        None => return Err("empty document".into()),
    }

    // A `head` ... `end head` block whose statements end in `;`.
    fn block<'a>(
        lines: &[(usize, &'a str)],
        pos: &mut usize,
        head: &str,
    ) -> Result<Vec<&'a str>, String> {
        let (n, l) = *lines.get(*pos).ok_or(format!("missing `{head}` block"))?;
        let l = l.trim_end_matches(':');
        if l != head {
            return Err(format!("line {n}: expected `{head}`, found `{l}`"));
        }
        *pos += 1;
        let mut body = Vec::new();
        let mut stmt = String::new();
        loop {
            let (n, l) = *lines.get(*pos).ok_or(format!("unterminated `{head}` block"))?;
            *pos += 1;
            if l == format!("end {head}") {
                if !stmt.is_empty() {
                    return Err(format!("line {n}: statement without `;` in `{head}`"));
                }
                return Ok(body);
            }
            stmt.push_str(l);
            stmt.push(' ');
            if l.ends_with(';') {
                if stmt.matches('{').count() != stmt.matches('}').count() {
                    return Err(format!("line {n}: unbalanced braces"));
                }
                body.push(l);
                stmt.clear();
            }
        }
    }

    let mut agents = Vec::new();
    while let Some(&(n, l)) = lines.get(pos) {
        let Some(name) = l.strip_prefix("Agent ") else {
            break;
        };
        let name = name.trim();
        if !is_ident(name) {
            return Err(err(n, "bad agent name"));
        }
        pos += 1;
        let vars = if name == "Environment" { "Obsvars" } else { "Vars" };
        block(&lines, &mut pos, vars)?;
        match lines.get(pos) {
            Some(&(_, l)) if l.starts_with("Actions =") && l.ends_with(';') => pos += 1,
            Some(&(n, _)) => return Err(err(n, "expected `Actions = {...};`")),
            None => return Err("truncated agent".into()),
        }
        block(&lines, &mut pos, "Protocol")?;
        block(&lines, &mut pos, "Evolution")?;
        match next(&mut pos) {
            Some((_, "end Agent")) => {}
            Some((n, _)) => return Err(err(n, "expected `end Agent`")),
            None => return Err("truncated agent".into()),
        }
        agents.push(name.to_string());
    }
    if agents.first().map(String::as_str) != Some("Environment") {
        return Err("the first agent must be `Environment`".into());
    }
    if agents.last().map(String::as_str) != Some("T") || agents.len() < 3 {
        return Err("expected behavior agents followed by the target agent `T`".into());
    }

    let eval = block(&lines, &mut pos, "Evaluation")?;
    let [cond] = eval.as_slice() else {
        return Err("expected a single `Error if ...;` evaluation".into());
    };
    let cond = cond
        .strip_prefix("Error if ")
        .and_then(|c| c.strip_suffix(';'))
        .ok_or("expected `Error if ...;`")?;
    let error_agents: Vec<String> = cond
        .split(" or ")
        .map(|d| {
            d.trim()
                .strip_suffix(".state = err")
                .map(str::to_string)
                .ok_or(format!("bad error disjunct `{d}`"))
        })
        .collect::<Result<_, _>>()?;
    if error_agents.is_empty() {
        return Err("empty error disjunction".into());
    }
    let init = block(&lines, &mut pos, "InitStates")?;
    if init.len() != 1 || !init[0].contains("Environment.act = start") {
        return Err("InitStates must fix `Environment.act = start`".into());
    }
    let groups = block(&lines, &mut pos, "Groups")?;
    if groups.is_empty() {
        return Err("no groups".into());
    }
    let formulae = block(&lines, &mut pos, "Formulae")?;
    if formulae.is_empty() {
        return Err("no formulae".into());
    }
    if let Some(&(n, _)) = lines.get(pos) {
        return Err(err(n, "trailing content"));
    }
    Ok(IsplOutline { agents, error_agents })
}
