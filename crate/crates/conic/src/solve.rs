//! Continuous conic solves: backend abstraction and the default
//! interior-point adapter.
//!
//! The mixed-integer layer and all callers talk to [`SocpBackend`], which
//! solves the continuous relaxation of a program under a bound patch (the
//! patch is how branch-and-bound pins binaries without mutating the program).
//! [`ClarabelBackend`] lowers the IR to the standard form
//! `min ½xᵀPx + qᵀx  s.t.  Ax + s = b, s ∈ K` with `P = 0` and the cone order
//! zero / nonnegative / second-order.

use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use thiserror::Error;

use crate::program::{ConicProgram, Sense, VarId};

/// Terminal status of a solve (continuous or mixed-integer).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal (continuous) or optimal within the gap tolerance
    /// (mixed-integer).
    Optimal,
    /// A feasible point is available but optimality was not proven.
    Feasible,
    /// The problem is infeasible.
    Infeasible,
    /// The objective is unbounded below.
    Unbounded,
    /// A time or node limit fired. Values are present iff an incumbent was
    /// found before the limit.
    TimeLimit,
    /// The backend failed numerically.
    NumericalError,
}

/// Counters accumulated over a solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    /// Interior-point iterations summed over all backend calls.
    pub iterations: u64,
    /// Branch-and-bound nodes solved (1 for a plain continuous solve).
    pub nodes: u64,
    /// Wall-clock time of the whole call.
    pub wall: Duration,
}

/// Result of a solve against a [`ConicProgram`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal values indexed like the program's variables; empty when no
    /// point is available (infeasible / unbounded / limit without incumbent).
    pub values: Vec<f64>,
    /// Objective of `values` (NaN when no point is available).
    pub objective: f64,
    /// Best proven lower bound on the optimal objective.
    pub bound: f64,
    pub stats: SolveStats,
}

impl Solution {
    /// Value of a variable in this solution.
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index() as usize]
    }

    /// True when the solution carries a usable primal point.
    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }
}

/// Why a relaxation solve failed to produce a definitive answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailKind {
    TimeLimit,
    IterationLimit,
    Numerical,
}

/// Outcome of one continuous relaxation solve.
#[derive(Clone, Debug)]
pub enum RelaxOutcome {
    Optimal {
        values: Vec<f64>,
        objective: f64,
        iterations: u64,
    },
    Infeasible,
    Unbounded,
    Failed {
        kind: FailKind,
        iterations: u64,
    },
}

/// Hard backend errors (assembly bugs, dimension mismatches).
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("bound patch pins variable {name:?} to an empty interval [{lb}, {ub}]")]
    EmptyPatch { name: String, lb: f64, ub: f64 },
}

/// A solver capable of continuous second-order cone programs.
///
/// `patch` overrides the declared bounds of selected variables (it is how the
/// mixed-integer layer pins binaries to 0 or 1). Binary declarations are
/// ignored here: the backend always solves the continuous relaxation over the
/// effective boxes.
pub trait SocpBackend {
    fn solve(
        &self,
        program: &ConicProgram,
        patch: &[(VarId, f64, f64)],
        time_limit: Option<Duration>,
    ) -> Result<RelaxOutcome, BackendError>;
}

/// Interior-point backend built on the `clarabel` conic solver.
#[derive(Clone, Debug)]
pub struct ClarabelBackend {
    /// Feasibility / duality-gap tolerance handed to the interior-point
    /// method.
    pub tol: f64,
    /// Iteration cap per solve.
    pub max_iter: u32,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl ClarabelBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SocpBackend for ClarabelBackend {
    fn solve(
        &self,
        program: &ConicProgram,
        patch: &[(VarId, f64, f64)],
        time_limit: Option<Duration>,
    ) -> Result<RelaxOutcome, BackendError> {
        let n = program.num_vars();

        // Effective bounds: declared boxes overridden by the patch.
        let mut lb: Vec<f64> = Vec::with_capacity(n);
        let mut ub: Vec<f64> = Vec::with_capacity(n);
        for v in program.var_ids() {
            let (l, u) = program.bounds(v);
            lb.push(l);
            ub.push(u);
        }
        for &(v, l, u) in patch {
            let i = v.index() as usize;
            if l > u {
                return Err(BackendError::EmptyPatch {
                    name: program.name(v).to_string(),
                    lb: l,
                    ub: u,
                });
            }
            lb[i] = l;
            ub[i] = u;
        }

        // Assemble rows as triplets in cone order: equalities (zero cone),
        // then inequalities and bounds (nonnegative cone), then SOC blocks.
        let mut ti: Vec<usize> = Vec::new();
        let mut tj: Vec<usize> = Vec::new();
        let mut tv: Vec<f64> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut row = 0usize;

        let push_terms = |row: usize,
                              terms: &[(VarId, f64)],
                              scale: f64,
                              ti: &mut Vec<usize>,
                              tj: &mut Vec<usize>,
                              tv: &mut Vec<f64>| {
            for &(v, c) in terms {
                ti.push(row);
                tj.push(v.index() as usize);
                tv.push(scale * c);
            }
        };

        // Zero cone: a·x = rhs   →  a·x + s = rhs, s = 0.
        let mut n_eq = 0usize;
        for r in &program.rows {
            if r.sense == Sense::Eq {
                push_terms(row, r.expr.terms(), 1.0, &mut ti, &mut tj, &mut tv);
                b.push(r.rhs);
                row += 1;
                n_eq += 1;
            }
        }
        // Pinned boxes join the zero cone for better conditioning.
        for i in 0..n {
            if lb[i] == ub[i] {
                ti.push(row);
                tj.push(i);
                tv.push(1.0);
                b.push(lb[i]);
                row += 1;
                n_eq += 1;
            }
        }

        // Nonnegative cone: a·x ≤ rhs  →  a·x + s = rhs, s ≥ 0.
        let mut n_ineq = 0usize;
        for r in &program.rows {
            match r.sense {
                Sense::Eq => {}
                Sense::Le => {
                    push_terms(row, r.expr.terms(), 1.0, &mut ti, &mut tj, &mut tv);
                    b.push(r.rhs);
                    row += 1;
                    n_ineq += 1;
                }
                Sense::Ge => {
                    push_terms(row, r.expr.terms(), -1.0, &mut ti, &mut tj, &mut tv);
                    b.push(-r.rhs);
                    row += 1;
                    n_ineq += 1;
                }
            }
        }
        for i in 0..n {
            if lb[i] == ub[i] {
                continue; // already pinned in the zero cone
            }
            if ub[i].is_finite() {
                ti.push(row);
                tj.push(i);
                tv.push(1.0);
                b.push(ub[i]);
                row += 1;
                n_ineq += 1;
            }
            if lb[i].is_finite() {
                ti.push(row);
                tj.push(i);
                tv.push(-1.0);
                b.push(-lb[i]);
                row += 1;
                n_ineq += 1;
            }
        }

        // SOC blocks: s = [head; elems](x) ∈ SOC  →  A = −coeffs, b = consts.
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        if n_ineq > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_ineq));
        }
        for c in &program.socs {
            push_terms(row, c.head.terms(), -1.0, &mut ti, &mut tj, &mut tv);
            b.push(c.head.constant_part());
            row += 1;
            for e in &c.elems {
                push_terms(row, e.terms(), -1.0, &mut ti, &mut tj, &mut tv);
                b.push(e.constant_part());
                row += 1;
            }
            cones.push(SupportedConeT::SecondOrderConeT(c.elems.len() + 1));
        }

        if row == 0 {
            // No rows at all: every variable is free and unconstrained. The
            // factorization backend rejects empty KKT systems, and the
            // answer is immediate anyway.
            return Ok(if program.objective.terms().is_empty() {
                RelaxOutcome::Optimal {
                    values: vec![0.0; n],
                    objective: program.objective.constant_part(),
                    iterations: 0,
                }
            } else {
                RelaxOutcome::Unbounded
            });
        }

        let a = CscMatrix::new_from_triplets(row, n, ti, tj, tv);
        let p_mat = CscMatrix::new(n, n, vec![0; n + 1], Vec::new(), Vec::new());
        let mut q = vec![0.0; n];
        for &(v, c) in program.objective.terms() {
            q[v.index() as usize] += c;
        }

        let settings = DefaultSettings::<f64> {
            verbose: false,
            max_iter: self.max_iter,
            time_limit: time_limit.map_or(f64::INFINITY, |d| d.as_secs_f64().max(1e-3)),
            tol_gap_abs: self.tol,
            tol_gap_rel: self.tol,
            tol_feas: self.tol,
            ..DefaultSettings::default()
        };

        let mut solver = DefaultSolver::new(&p_mat, &q, &a, &b, &cones, settings);
        solver.solve();
        let sol = &solver.solution;
        let iterations = sol.iterations as u64;
        let outcome = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => RelaxOutcome::Optimal {
                values: sol.x.clone(),
                objective: sol.obj_val + program.objective.constant_part(),
                iterations,
            },
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                RelaxOutcome::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                RelaxOutcome::Unbounded
            }
            SolverStatus::MaxTime => RelaxOutcome::Failed {
                kind: FailKind::TimeLimit,
                iterations,
            },
            SolverStatus::MaxIterations => RelaxOutcome::Failed {
                kind: FailKind::IterationLimit,
                iterations,
            },
            _ => RelaxOutcome::Failed {
                kind: FailKind::Numerical,
                iterations,
            },
        };
        Ok(outcome)
    }
}

/// Solves the continuous relaxation of `program` (binaries relaxed to their
/// `[0, 1]` boxes).
pub fn solve_continuous(
    program: &ConicProgram,
    backend: &dyn SocpBackend,
) -> Result<Solution, BackendError> {
    let t0 = Instant::now();
    let outcome = backend.solve(program, &[], None)?;
    let mut stats = SolveStats {
        nodes: 1,
        ..SolveStats::default()
    };
    let sol = match outcome {
        RelaxOutcome::Optimal {
            values,
            objective,
            iterations,
        } => {
            stats.iterations = iterations;
            Solution {
                status: SolveStatus::Optimal,
                values,
                objective,
                bound: objective,
                stats,
            }
        }
        RelaxOutcome::Infeasible => Solution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: f64::NAN,
            bound: f64::INFINITY,
            stats,
        },
        RelaxOutcome::Unbounded => Solution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective: f64::NAN,
            bound: f64::NEG_INFINITY,
            stats,
        },
        RelaxOutcome::Failed { kind, iterations } => {
            stats.iterations = iterations;
            Solution {
                status: match kind {
                    FailKind::TimeLimit => SolveStatus::TimeLimit,
                    _ => SolveStatus::NumericalError,
                },
                values: Vec::new(),
                objective: f64::NAN,
                bound: f64::NEG_INFINITY,
                stats,
            }
        }
    };
    Ok(Solution {
        stats: SolveStats {
            wall: t0.elapsed(),
            ..sol.stats
        },
        ..sol
    })
}
