//! Concurrent game structure for deterministic systems and its coalition
//! safety solver.
//!
//! A game state holds the current state of every behavior, the behavior
//! scheduled for the last request (`sch`, `None` for the initial `start`
//! marker) and the pending target request `req`. The controller picks a
//! behavior, the target picks the next request leaving the destination of
//! `req`; a behavior that cannot execute `act(req)` goes to its error state,
//! which always loses and is therefore never materialized.
//!
//! * existential mode: controller and target play together (approximation).
//! * universal mode: the controller alone, against every request (exact
//!   composition).

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{ActionId, Ltfs, StateId, SystemSpec};
use crate::simrel::minimize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("E_NONDETERMINISTIC_SYSTEM: behavior `{0}` is nondeterministic")]
    NondeterministicSystem(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    pub behaviors: Vec<StateId>,
    pub sch: Option<usize>,
    /// Index into the target's transition list.
    pub req: usize,
}

/// Legal moves of a behavior agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BehaviorMoves {
    States(Vec<StateId>),
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Existential,
    Universal,
}

#[derive(Debug, Clone)]
pub struct GameStructure {
    system: SystemSpec,
    target: Ltfs,
    /// Target action -> alphabet id.
    action_map: Vec<Option<ActionId>>,
    states: Vec<GameState>,
    ids: HashMap<GameState, usize>,
    initials: Vec<usize>,
    /// Per state, per honoring controller move `k`: successors, one per target move.
    moves: Vec<Vec<(usize, Vec<usize>)>>,
    preds: Vec<Vec<usize>>,
}

pub fn build_game(sys: &SystemSpec, target: &Ltfs) -> Result<GameStructure, GameError> {
    if let Some(b) = sys.behaviors().iter().find(|b| !b.is_deterministic()) {
        return Err(GameError::NondeterministicSystem(b.name().to_string()));
    }
    let mut g = GameStructure {
        action_map: target.actions().iter().map(|a| sys.action_id(a)).collect(),
        system: sys.clone(),
        target: target.clone(),
        states: Vec::new(),
        ids: HashMap::new(),
        initials: Vec::new(),
        moves: Vec::new(),
        preds: Vec::new(),
    };
    let init = sys.initial_tuple();
    let mut queue = VecDeque::new();
    for &r in target.outgoing(target.initial()) {
        let (id, fresh) = g.intern(GameState {
            behaviors: init.clone(),
            sch: None,
            req: r,
        });
        g.initials.push(id);
        if fresh {
            queue.push_back(id);
        }
    }
    while let Some(q) = queue.pop_front() {
        let mut moves = Vec::new();
        for k in 1..=sys.len() {
            let Some(next) = g.step_behaviors(&g.states[q], k) else {
                continue;
            };
            let mut succs = Vec::new();
            for r in g.target_moves(q) {
                let (id, fresh) = g.intern(GameState {
                    behaviors: next.clone(),
                    sch: Some(k),
                    req: r,
                });
                if fresh {
                    queue.push_back(id);
                }
                succs.push(id);
            }
            moves.push((k, succs));
        }
        if g.moves.len() <= q {
            g.moves.resize(q + 1, Vec::new());
        }
        g.moves[q] = moves;
    }
    g.moves.resize(g.states.len(), Vec::new());
    g.preds = vec![Vec::new(); g.states.len()];
    for (q, moves) in g.moves.iter().enumerate() {
        for (_, succs) in moves {
            for &s in succs {
                g.preds[s].push(q);
            }
        }
    }
    for p in &mut g.preds {
        p.sort_unstable();
        p.dedup();
    }
    Ok(g)
}

impl GameStructure {
    fn intern(&mut self, s: GameState) -> (usize, bool) {
        if let Some(&id) = self.ids.get(&s) {
            return (id, false);
        }
        let id = self.states.len();
        self.ids.insert(s.clone(), id);
        self.states.push(s);
        (id, true)
    }

    /// Behavior tuple after delegating `act(req)` to `k`, or `None` on error.
    fn step_behaviors(&self, q: &GameState, k: usize) -> Option<Vec<StateId>> {
        match self.behavior_moves_of(q, k) {
            BehaviorMoves::States(s) => {
                let mut next = q.behaviors.clone();
                next[k - 1] = s[0];
                Some(next)
            }
            BehaviorMoves::Error => None,
        }
    }

    fn behavior_moves_of(&self, q: &GameState, j: usize) -> BehaviorMoves {
        let t = self.target.transition(q.req);
        let post = match self.action_map[t.action] {
            Some(a) => self.system.post(j, q.behaviors[j - 1], a),
            None => Vec::new(),
        };
        if post.is_empty() {
            BehaviorMoves::Error
        } else {
            BehaviorMoves::States(post)
        }
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn target(&self) -> &Ltfs {
        &self.target
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, q: usize) -> &GameState {
        &self.states[q]
    }

    pub fn state_id(&self, s: &GameState) -> Option<usize> {
        self.ids.get(s).copied()
    }

    pub fn initials(&self) -> &[usize] {
        &self.initials
    }

    /// Moves of behavior agent `j` (1-based) at `q`.
    pub fn behavior_moves(&self, q: usize, j: usize) -> BehaviorMoves {
        self.behavior_moves_of(&self.states[q], j)
    }

    /// Target transitions that may be requested next: those leaving the
    /// destination of the pending request.
    pub fn target_moves(&self, q: usize) -> Vec<usize> {
        let dest = self.target.transition(self.states[q].req).to;
        self.target.outgoing(dest).to_vec()
    }

    pub fn controller_moves(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.system.len()
    }

    /// Joint move: controller schedules `k`, target requests `r`. `None`
    /// when behavior `k` cannot honor the pending request.
    pub fn step(&self, q: usize, k: usize, r: usize) -> Option<usize> {
        let s = &self.states[q];
        let behaviors = self.step_behaviors(s, k)?;
        self.state_id(&GameState {
            behaviors,
            sch: Some(k),
            req: r,
        })
    }

    /// Per honoring controller move, successors over all target moves.
    pub fn honoring_moves(&self, q: usize) -> &[(usize, Vec<usize>)] {
        &self.moves[q]
    }

    pub fn format_state(&self, q: usize) -> String {
        let s = &self.states[q];
        let sch = s.sch.map_or("start".to_string(), |k| self.system.behavior(k).name().to_string());
        format!(
            "{} sch={} req={}",
            self.system.format_tuple(&s.behaviors),
            sch,
            self.target.format_transition(s.req)
        )
    }

    fn wins(&self, q: usize, member: &[bool], mode: Mode) -> bool {
        self.moves[q].iter().any(|(_, succs)| match mode {
            Mode::Existential => succs.iter().any(|&s| member[s]),
            Mode::Universal => succs.iter().all(|&s| member[s]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningSet {
    member: Vec<bool>,
    mode: Mode,
}

impl WinningSet {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn contains(&self, q: usize) -> bool {
        self.member[q]
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.member.len()).filter(|&q| self.member[q])
    }

    pub fn len(&self) -> usize {
        self.members().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members that one more refinement pass would remove.
    pub fn unstable_members(&self, g: &GameStructure) -> usize {
        self.members().filter(|&q| !g.wins(q, &self.member, self.mode)).count()
    }

    pub fn all_initials_winning(&self, g: &GameStructure) -> bool {
        g.initials().iter().all(|&q| self.member[q])
    }
}

/// Greatest fixpoint of the mode's winning condition.
pub fn solve_safety(g: &GameStructure, mode: Mode) -> WinningSet {
    let n = g.state_count();
    let mut member = vec![true; n];
    let mut queued = vec![true; n];
    let mut work: VecDeque<usize> = (0..n).collect();
    while let Some(q) = work.pop_front() {
        queued[q] = false;
        if !member[q] || g.wins(q, &member, mode) {
            continue;
        }
        member[q] = false;
        for &p in &g.preds[q] {
            if member[p] && !queued[p] {
                queued[p] = true;
                work.push_back(p);
            }
        }
    }
    WinningSet { member, mode }
}

/// Reads the approximation off an existential winning set: states are
/// (behavior tuple, request source) projections of winning states plus the
/// initial tuple, related whenever two winning states are related by a game
/// step. The result is restricted to the part reachable from the initial
/// tuple and bisimulation-minimized.
pub fn extract_approx_from_game(g: &GameStructure, w: &WinningSet) -> Ltfs {
    let sys = g.system();
    let target = g.target();
    let mut ids: HashMap<(Vec<StateId>, StateId), usize> = HashMap::new();
    let mut names = Vec::new();
    let mut intern = |b: &[StateId], t: StateId, names: &mut Vec<String>| {
        *ids.entry((b.to_vec(), t)).or_insert_with(|| {
            names.push(format!("({},{})", sys.format_tuple(b), target.state_name(t)));
            names.len() - 1
        })
    };
    let init = intern(&sys.initial_tuple(), target.initial(), &mut names);

    let mut edges = Vec::new();
    for q in w.members() {
        let s = g.state(q);
        let req = target.transition(s.req);
        let from = intern(&s.behaviors, req.from, &mut names);
        for (_, succs) in g.honoring_moves(q) {
            for &q2 in succs.iter().filter(|&&q2| w.contains(q2)) {
                let to = intern(&g.state(q2).behaviors, req.to, &mut names);
                edges.push((from, target.action_name(req.action).to_string(), to));
            }
        }
    }

    // Restrict to what the initial tuple reaches.
    let mut adj = vec![Vec::new(); names.len()];
    for (i, e) in edges.iter().enumerate() {
        adj[e.0].push(i);
    }
    let mut local = vec![usize::MAX; names.len()];
    let mut order = vec![init];
    local[init] = 0;
    let mut i = 0;
    while i < order.len() {
        for &e in &adj[order[i]] {
            let to = edges[e].2;
            if local[to] == usize::MAX {
                local[to] = order.len();
                order.push(to);
            }
        }
        i += 1;
    }
    let states = order.iter().map(|&s| names[s].clone()).collect();
    let transitions: Vec<_> = edges
        .into_iter()
        .filter(|e| local[e.0] != usize::MAX)
        .map(|(f, a, t)| (local[f], a, local[t]))
        .collect();
    let hat = Ltfs::from_named(format!("{}_approx", target.name()), states, 0, transitions);
    minimize(&hat)
}

/// Convenience: build, solve existentially and extract.
pub fn game_approx(sys: &SystemSpec, target: &Ltfs) -> Result<Ltfs, GameError> {
    let g = build_game(sys, target)?;
    let w = solve_safety(&g, Mode::Existential);
    Ok(extract_approx_from_game(&g, &w))
}

/// Exact composition exists iff every initial game state wins universally.
pub fn game_exact(sys: &SystemSpec, target: &Ltfs) -> Result<bool, GameError> {
    let g = build_game(sys, target)?;
    Ok(solve_safety(&g, Mode::Universal).all_initials_winning(&g))
}
