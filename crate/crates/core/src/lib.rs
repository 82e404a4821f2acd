//! Behavior composition with optimal target approximation.
//!
//! Given a set of nondeterministic available behaviors and a target behavior,
//! `behcomp` computes the largest fully realizable target simulated by the
//! original one, checks for exact compositions, solves the equivalent safety
//! game for deterministic systems, and runs controllers against the system.

pub mod approx;
pub mod engine;
pub mod game;
pub mod io;
pub mod model;
pub mod product;
pub mod simrel;

pub use approx::{check_exact, compute_approx, synthesize, ApproxError, Synthesis};
pub use engine::{dominates, realized_traces_bounded, ControllerTable, Request, RequestSpace, Resolver, Session, SessionError};
pub use game::{build_game, extract_approx_from_game, game_approx, solve_safety, GameError, Mode};
pub use model::{validate_behavior, Ltfs, ModelError, RawBehavior, SystemSpec, TerminalPolicy};
pub use simrel::{largest_simulation, minimize, sim_equivalent, simulates};
