//! Second-order cone programming with a thin mixed-binary layer.
//!
//! This crate provides the optimization substrate for the dispatch stack:
//!
//! * [`ConicProgram`] — a solver-agnostic IR holding box/binary variables,
//!   linear constraints, second-order cones over affine expressions, and a
//!   linear objective, plus an evaluator for checking arbitrary primal
//!   points.
//! * [`solve_continuous`] / [`SocpBackend`] — continuous solves through a
//!   pluggable backend; the default is the `clarabel` interior-point solver.
//! * [`solve_misocp`] — deterministic best-bound branch-and-bound over the
//!   backend for programs with binary variables.
//! * [`io`] — a plain-text serialization that round-trips programs exactly,
//!   for debugging and golden tests.

mod branch;
mod expr;
pub mod io;
mod program;
mod solve;
pub mod testgen;

pub use branch::{solve_misocp, MisocpSettings};
pub use expr::LinExpr;
pub use program::{ConicProgram, ProgramError, Sense, VarId};
pub use solve::{
    solve_continuous, BackendError, ClarabelBackend, FailKind, RelaxOutcome, SocpBackend,
    Solution, SolveStats, SolveStatus,
};
