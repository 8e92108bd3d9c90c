//! The conic program intermediate representation.
//!
//! A [`ConicProgram`] collects typed variables (continuous boxes or binaries),
//! linear constraints, second-order cones over affine expressions, and a
//! linear objective. Handles ([`VarId`]) are opaque and stable: model
//! builders keep them and later read solutions or evaluate residuals without
//! knowing row layout.
//!
//! The representation is solver-agnostic; adapters lower it to a concrete
//! backend form. A small evaluator ships with the IR so tests can check any
//! primal point against every stored constraint without involving a solver.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::LinExpr;

/// Opaque handle to a program variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub(crate) fn from_index(i: u32) -> Self {
        VarId(i)
    }

    pub(crate) fn index(self) -> u32 {
        self.0
    }
}

/// Comparison sense of a linear constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct VarInfo {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
}

/// A linear constraint `expr (sense) rhs` with the expression canonicalized
/// and its constant folded into the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LinRow {
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

/// A second-order cone membership `‖elems‖₂ ≤ head` over affine expressions.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SocCone {
    pub head: LinExpr,
    pub elems: Vec<LinExpr>,
}

/// Errors raised while constructing or querying a program.
#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("variable name {0:?} is already in use")]
    DuplicateName(String),
    #[error("variable name must be non-empty and contain no whitespace, got {0:?}")]
    BadName(String),
    #[error("variable {name:?} has invalid bounds [{lb}, {ub}]")]
    BadBounds { name: String, lb: f64, ub: f64 },
    #[error("expression references variable index {0} outside this program")]
    ForeignVariable(u32),
    #[error("constraint has a non-finite coefficient or right-hand side")]
    NonFiniteCoefficient,
    #[error("second-order cone needs at least one member expression")]
    EmptyCone,
}

/// A conic optimization program: minimize a linear objective over box/binary
/// variables subject to linear constraints and second-order cones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProgram {
    pub(crate) vars: Vec<VarInfo>,
    by_name: HashMap<String, VarId>,
    pub(crate) rows: Vec<LinRow>,
    pub(crate) socs: Vec<SocCone>,
    pub(crate) objective: LinExpr,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_name(&self, name: &str) -> Result<(), ProgramError> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(ProgramError::BadName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(ProgramError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    /// Adds a continuous variable with box bounds (use `±f64::INFINITY` for a
    /// free side). Bounds must satisfy `lb ≤ ub` and must not be NaN.
    pub fn add_var(&mut self, name: &str, lb: f64, ub: f64) -> Result<VarId, ProgramError> {
        self.check_name(name)?;
        if lb.is_nan() || ub.is_nan() || lb > ub {
            return Err(ProgramError::BadBounds {
                name: name.to_string(),
                lb,
                ub,
            });
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo {
            name: name.to_string(),
            lb,
            ub,
            binary: false,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds a binary variable (bounds `[0, 1]`, integrality enforced by the
    /// mixed-integer layer; continuous solves treat it as its relaxation).
    pub fn add_binary(&mut self, name: &str) -> Result<VarId, ProgramError> {
        let id = self.add_var(name, 0.0, 1.0)?;
        self.vars[id.index() as usize].binary = true;
        Ok(id)
    }

    /// Looks a variable up by name.
    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    /// The name of a variable.
    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.index() as usize].name
    }

    /// The `(lb, ub)` box of a variable.
    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        let info = &self.vars[v.index() as usize];
        (info.lb, info.ub)
    }

    /// Replaces the box of a variable.
    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) -> Result<(), ProgramError> {
        if lb.is_nan() || ub.is_nan() || lb > ub {
            return Err(ProgramError::BadBounds {
                name: self.name(v).to_string(),
                lb,
                ub,
            });
        }
        let info = &mut self.vars[v.index() as usize];
        info.lb = lb;
        info.ub = ub;
        Ok(())
    }

    /// True if the variable was declared binary.
    pub fn is_binary(&self, v: VarId) -> bool {
        self.vars[v.index() as usize].binary
    }

    fn validate_expr(&self, expr: &LinExpr) -> Result<(), ProgramError> {
        if let Some(max) = expr.max_var_index() {
            if max as usize >= self.vars.len() {
                return Err(ProgramError::ForeignVariable(max));
            }
        }
        if !expr.constant_part().is_finite()
            || expr.terms().iter().any(|(_, c)| !c.is_finite())
        {
            return Err(ProgramError::NonFiniteCoefficient);
        }
        Ok(())
    }

    /// Adds the linear constraint `expr (sense) rhs`. The expression constant
    /// is folded into the right-hand side. Returns the row index.
    pub fn add_linear(
        &mut self,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ProgramError> {
        self.validate_expr(&expr)?;
        if !rhs.is_finite() {
            return Err(ProgramError::NonFiniteCoefficient);
        }
        let mut expr = expr.canonical();
        let shifted = rhs - expr.constant_part();
        expr.add_constant(-expr.constant_part());
        self.rows.push(LinRow {
            expr,
            sense,
            rhs: shifted,
        });
        Ok(self.rows.len() - 1)
    }

    /// Adds `expr = rhs`.
    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64) -> Result<usize, ProgramError> {
        self.add_linear(expr, Sense::Eq, rhs)
    }

    /// Adds `expr ≤ rhs`.
    pub fn add_le(&mut self, expr: LinExpr, rhs: f64) -> Result<usize, ProgramError> {
        self.add_linear(expr, Sense::Le, rhs)
    }

    /// Adds `expr ≥ rhs`.
    pub fn add_ge(&mut self, expr: LinExpr, rhs: f64) -> Result<usize, ProgramError> {
        self.add_linear(expr, Sense::Ge, rhs)
    }

    /// Adds the cone membership `‖elems‖₂ ≤ head`. Returns the cone index.
    pub fn add_soc(
        &mut self,
        head: LinExpr,
        elems: Vec<LinExpr>,
    ) -> Result<usize, ProgramError> {
        if elems.is_empty() {
            return Err(ProgramError::EmptyCone);
        }
        self.validate_expr(&head)?;
        for e in &elems {
            self.validate_expr(e)?;
        }
        self.socs.push(SocCone {
            head: head.canonical(),
            elems: elems.into_iter().map(LinExpr::canonical).collect(),
        });
        Ok(self.socs.len() - 1)
    }

    /// Replaces the objective (minimized).
    pub fn set_objective(&mut self, expr: LinExpr) -> Result<(), ProgramError> {
        self.validate_expr(&expr)?;
        self.objective = expr.canonical();
        Ok(())
    }

    /// Adds terms to the existing objective.
    pub fn add_objective(&mut self, expr: LinExpr) -> Result<(), ProgramError> {
        self.validate_expr(&expr)?;
        let current = std::mem::take(&mut self.objective);
        self.objective = (current + expr).canonical();
        Ok(())
    }

    /// The current objective expression.
    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    pub fn num_linear(&self) -> usize {
        self.rows.len()
    }

    pub fn num_socs(&self) -> usize {
        self.socs.len()
    }

    /// Binary variable handles in declaration order.
    pub fn binary_ids(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary)
            .map(|(i, _)| VarId(i as u32))
            .collect()
    }

    /// All variable handles in declaration order.
    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len() as u32).map(VarId)
    }

    // ------------------------------------------------------------------
    // Evaluation: every check below works on a raw primal point, entirely
    // independent of any solver.
    // ------------------------------------------------------------------

    /// Objective value at a primal point.
    pub fn eval_objective(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Signed residuals of all linear rows: `expr(x) − rhs` in row order.
    /// Feasible means `= 0` (eq), `≤ 0` (le), `≥ 0` (ge).
    pub fn linear_residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.expr.eval(x) - r.rhs).collect()
    }

    /// Cone slacks `head(x) − ‖elems(x)‖₂` in cone order; feasible means ≥ 0.
    pub fn soc_slacks(&self, x: &[f64]) -> Vec<f64> {
        self.socs
            .iter()
            .map(|c| {
                let norm = c
                    .elems
                    .iter()
                    .map(|e| e.eval(x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                c.head.eval(x) - norm
            })
            .collect()
    }

    /// Worst violation across bounds, linear rows, and cones (0 when
    /// feasible). Binary integrality is not checked here.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, info) in self.vars.iter().enumerate() {
            worst = worst.max(info.lb - x[i]).max(x[i] - info.ub);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let res = self.rows[r].expr.eval(x) - row.rhs;
            let v = match row.sense {
                Sense::Eq => res.abs(),
                Sense::Le => res.max(0.0),
                Sense::Ge => (-res).max(0.0),
            };
            worst = worst.max(v);
        }
        for s in self.soc_slacks(x) {
            worst = worst.max(-s);
        }
        worst
    }
}
