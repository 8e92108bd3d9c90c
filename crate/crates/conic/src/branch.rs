//! Deterministic branch-and-bound for mixed-binary second-order cone
//! programs.
//!
//! Design choices, all in service of reproducibility and sound bounds:
//!
//! * **Best-bound node selection.** The frontier is a min-heap keyed by the
//!   parent relaxation objective; ties break on insertion order, so two runs
//!   over the same program explore identical trees.
//! * **Most-fractional branching.** The branch variable is the binary whose
//!   relaxed value is closest to ½; ties break on the lowest variable index.
//! * **Polished incumbents.** When a relaxation lands on an (almost) integral
//!   point, all binaries are pinned to the rounding and the program is
//!   re-solved, so incumbent objectives and primal points are feasible for
//!   the true mixed-integer problem rather than for its relaxation.
//! * **Warm starts prune, never steer.** A warm start seeds the incumbent by
//!   pinning binaries to the supplied values; child push order stays a
//!   function of the node's own relaxation, so a warm run visits a subset of
//!   the cold run's nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::program::{ConicProgram, VarId};
use crate::solve::{
    BackendError, FailKind, RelaxOutcome, SocpBackend, Solution, SolveStats, SolveStatus,
};

/// Knobs for the mixed-integer search.
#[derive(Clone, Copy, Debug)]
pub struct MisocpSettings {
    /// Terminate when `incumbent − bound ≤ rel_gap · max(1, |incumbent|)`.
    pub rel_gap: f64,
    /// A relaxed binary counts as integral when within this distance of 0/1.
    pub integrality_tol: f64,
    /// Wall-clock budget for the whole search.
    pub time_limit: Option<Duration>,
    /// Cap on relaxations solved.
    pub node_limit: Option<u64>,
}

impl Default for MisocpSettings {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            integrality_tol: 1e-6,
            time_limit: None,
            node_limit: None,
        }
    }
}

/// Frontier entry ordered so the heap pops lowest bound first, then lowest
/// sequence number.
struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(VarId, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want min bound on top.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn patch_of(fixings: &[(VarId, f64)]) -> Vec<(VarId, f64, f64)> {
    fixings.iter().map(|&(v, val)| (v, val, val)).collect()
}

/// Solves a mixed-binary SOCP by branch-and-bound over the continuous
/// backend.
///
/// `warm`, when given, must be indexed like the program's variables; only its
/// binary entries are read (rounded and pinned to seed the incumbent). A
/// program without binaries degenerates to a single continuous solve.
pub fn solve_misocp(
    program: &ConicProgram,
    backend: &dyn SocpBackend,
    warm: Option<&[f64]>,
    settings: &MisocpSettings,
) -> Result<Solution, BackendError> {
    let binaries = program.binary_ids();
    if binaries.is_empty() {
        return crate::solve::solve_continuous(program, backend);
    }
    let t0 = Instant::now();
    let deadline = settings.time_limit.map(|d| t0 + d);
    let mut iterations = 0u64;
    let mut nodes = 0u64;

    let remaining = |deadline: Option<Instant>| -> Option<Duration> {
        deadline.map(|d| d.saturating_duration_since(Instant::now()))
    };
    let out_of_time = |deadline: Option<Instant>| -> bool {
        deadline.is_some_and(|d| Instant::now() >= d)
    };

    // Incumbent: best known integer-feasible point.
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut hit_limit = false;
    let mut sound_bound = true;

    let gap_abs = |obj: f64| settings.rel_gap * obj.abs().max(1.0);

    {
        // Warm start: pin binaries to the supplied values and solve once.
        if let Some(w) = warm {
            if !binaries.is_empty() && w.len() == program.num_vars() {
                let fixings: Vec<(VarId, f64)> = binaries
                    .iter()
                    .map(|&v| (v, w[v.index() as usize].round().clamp(0.0, 1.0)))
                    .collect();
                nodes += 1;
                if let RelaxOutcome::Optimal {
                    values,
                    objective,
                    iterations: it,
                } = backend.solve(program, &patch_of(&fixings), remaining(deadline))?
                {
                    iterations += it;
                    incumbent = Some((objective, values));
                }
            }
        }
    }

    let mut frontier: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    frontier.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixings: Vec::new(),
    });

    while let Some(node) = frontier.pop() {
        if out_of_time(deadline) || settings.node_limit.is_some_and(|n| nodes >= n) {
            hit_limit = true;
            frontier.push(node); // keep its bound visible for reporting
            break;
        }
        if let Some((inc_obj, _)) = &incumbent {
            if node.bound >= inc_obj - gap_abs(*inc_obj) {
                continue;
            }
        }
        nodes += 1;
        let outcome = backend.solve(program, &patch_of(&node.fixings), remaining(deadline))?;
        let (values, objective) = match outcome {
            RelaxOutcome::Optimal {
                values,
                objective,
                iterations: it,
            } => {
                iterations += it;
                (values, objective)
            }
            RelaxOutcome::Infeasible => continue,
            RelaxOutcome::Unbounded => {
                // A bounded MISOCP cannot have an unbounded node relaxation
                // unless the program itself is unbounded; surface that.
                return Ok(Solution {
                    status: SolveStatus::Unbounded,
                    values: Vec::new(),
                    objective: f64::NAN,
                    bound: f64::NEG_INFINITY,
                    stats: SolveStats {
                        iterations,
                        nodes,
                        wall: t0.elapsed(),
                    },
                });
            }
            RelaxOutcome::Failed { kind, iterations: it } => {
                iterations += it;
                if kind == FailKind::TimeLimit {
                    hit_limit = true;
                    frontier.push(Node { ..node });
                    break;
                }
                // Numerical failure: the node cannot be pruned soundly, so
                // any optimality claim is off the table.
                sound_bound = false;
                continue;
            }
        };
        if let Some((inc_obj, _)) = &incumbent {
            if objective >= inc_obj - gap_abs(*inc_obj) {
                continue;
            }
        }

        // Most fractional unpinned binary; ties to the lowest index (the
        // scan order is declaration order and the comparison is strict).
        let mut branch: Option<(VarId, f64)> = None; // (var, distance to ½)
        let mut integral = true;
        for &v in &binaries {
            let x = values[v.index() as usize];
            if (x - x.round()).abs() > settings.integrality_tol {
                integral = false;
                let d = (x - 0.5).abs();
                if branch.as_ref().is_none_or(|&(_, best)| d < best) {
                    branch = Some((v, d));
                }
            }
        }

        if integral {
            // Polish: pin every binary to the rounding and re-solve so the
            // incumbent is feasible for the true problem.
            let fixings: Vec<(VarId, f64)> = binaries
                .iter()
                .map(|&v| (v, values[v.index() as usize].round()))
                .collect();
            nodes += 1;
            let polished =
                backend.solve(program, &patch_of(&fixings), remaining(deadline))?;
            let candidate = match polished {
                RelaxOutcome::Optimal {
                    values: pv,
                    objective: pobj,
                    iterations: it,
                } => {
                    iterations += it;
                    Some((pobj, pv))
                }
                // The relaxation already achieved these pinned values, so a
                // failure here is a backend hiccup; fall back to the node's
                // own point.
                _ => Some((objective, values)),
            };
            if let Some((cobj, cvals)) = candidate {
                if incumbent.as_ref().is_none_or(|(i, _)| cobj < *i) {
                    incumbent = Some((cobj, cvals));
                }
            }
            continue;
        }

        let (bvar, _) = branch.expect("non-integral node must yield a branch variable");
        let prefer = values[bvar.index() as usize].round().clamp(0.0, 1.0);
        for val in [prefer, 1.0 - prefer] {
            let mut fixings = node.fixings.clone();
            fixings.push((bvar, val));
            seq += 1;
            frontier.push(Node {
                bound: objective,
                seq,
                fixings,
            });
        }
    }

    let open_bound = frontier
        .iter()
        .map(|n| n.bound)
        .fold(f64::INFINITY, f64::min);
    let stats = SolveStats {
        iterations,
        nodes,
        wall: t0.elapsed(),
    };

    let sol = match incumbent {
        Some((obj, values)) => {
            let bound = if frontier.is_empty() {
                obj
            } else {
                open_bound.min(obj)
            };
            let proven = frontier.is_empty()
                || obj - bound <= gap_abs(obj);
            Solution {
                status: if hit_limit && !proven {
                    SolveStatus::TimeLimit
                } else if proven && sound_bound {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::Feasible
                },
                values,
                objective: obj,
                bound,
                stats,
            }
        }
        None => Solution {
            status: if hit_limit {
                SolveStatus::TimeLimit
            } else if sound_bound {
                SolveStatus::Infeasible
            } else {
                SolveStatus::NumericalError
            },
            values: Vec::new(),
            objective: f64::NAN,
            bound: if frontier.is_empty() {
                f64::INFINITY
            } else {
                open_bound
            },
            stats,
        },
    };
    Ok(sol)
}
