//! Problem files, DOT and ISPL export.

pub mod dot;
pub mod ispl;
pub mod problem;

pub use dot::{enacted_to_dot, full_to_dot, ltfs_to_dot, pruned_to_dot};
pub use ispl::{check_ispl_structure, export_ispl, IsplError};
pub use problem::{parse_problem, parse_problem_with, serialize_problem, Problem, ProblemError};
