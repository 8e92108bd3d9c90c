//! Constraint builders translating a [`Case`](crate::case::Case) into a
//! conic program, plus residual evaluators for candidate solutions.
//!
//! The model is assembled in three passes over one shared
//! [`ConicProgram`](conic::ConicProgram):
//!
//! 1. [`hydraulics`] — mass flows, pressures, pump power (creates the pump
//!    electric-power variables the power model consumes),
//! 2. [`power`] — branch-flow constraints of the electric network and the
//!    operating-cost objective,
//! 3. [`thermal`] — temperatures, heat transfer and the simplified thermal
//!    dynamics (consumes device power and flow variables).
//!
//! Builders add every *linear* relation and every variable box directly to
//! the program. Nonconvex relations — bilinear products, quadratic
//! pressure-loss equalities, and pump operating regions — are not added;
//! they are recorded in a [`BilinearRegistry`] and turned into convex
//! constraints by the relaxation layer. Keeping them out of the program
//! means one build serves every relaxation strength, and fixing the flow
//! variables (feasibility recovery) turns every registered product into an
//! exact linear relation without rebuilding.
//!
//! Residual evaluators recompute the original (unrelaxed) physics straight
//! from the case and the variable handles, so they are independent of both
//! the program rows and the relaxation — a deliberate redundancy that lets
//! tests cross-check the builders.

pub mod hydraulics;
pub mod power;
pub mod thermal;

pub use hydraulics::{build_hydraulic_relations, hydraulic_residuals, HydraulicVarHandles};
pub use power::{build_power_constraints, power_residuals, PowerVarHandles};
pub use thermal::{build_thermal_relations, thermal_residuals, MixTotal, ThermalVarHandles};

use conic::{ConicProgram, LinExpr, Solution, VarId};
use std::fmt;

/// Failure while translating a case into program constraints.
#[derive(Debug)]
pub enum BuildError {
    /// The underlying program rejected a row or variable.
    Program(conic::ProgramError),
    /// The case is structurally unusable for this builder (the message
    /// names the offending element).
    Data(String),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::Program(e) => write!(f, "program error: {e}"),
            BuildError::Data(msg) => write!(f, "case data error: {msg}"),
        }
    }
}

impl std::error::Error for BuildError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            BuildError::Program(e) => Some(e),
            BuildError::Data(_) => None,
        }
    }
}

impl From<conic::ProgramError> for BuildError {
    fn from(e: conic::ProgramError) -> Self {
        BuildError::Program(e)
    }
}

/// Which physical relation a registered bilinear product belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermFamily {
    /// Pump electric power: P·η·ρ_w = m·Δp.
    PumpPower,
    /// Heat transfer at sources and heat exchangers: H = c_w·m·ΔT.
    HeatTransfer,
    /// Nodal temperature mixing in multiplied-through form.
    Mixing,
    /// Advection term of the simplified thermal dynamics: m·(T_out − T_in).
    Std,
}

impl fmt::Display for TermFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TermFamily::PumpPower => "pump-power",
            TermFamily::HeatTransfer => "heat-transfer",
            TermFamily::Mixing => "mixing",
            TermFamily::Std => "std",
        };
        f.write_str(s)
    }
}

/// One registered product constraint `z = c·x·y`.
///
/// Variable bounds are **not** snapshotted here: the relaxation layer reads
/// them from the program when it builds envelopes, so that pinning a
/// variable (e.g. fixing flows during feasibility recovery) automatically
/// collapses every envelope that touches it to the exact linear relation.
#[derive(Clone, Debug)]
pub struct BilinearTerm {
    /// Stable 0-based id; doubles as the partition-state key.
    pub id: usize,
    pub z: VarId,
    pub x: VarId,
    pub y: VarId,
    pub c: f64,
    pub family: TermFamily,
    /// Human-readable element tag, e.g. `pipe 1-2` or `node 7`.
    pub label: String,
    /// Period the product belongs to.
    pub period: usize,
}

impl BilinearTerm {
    /// Product-equation residual `z − c·x·y` at a primal point.
    pub fn residual(&self, sol: &Solution) -> f64 {
        sol.value(self.z) - self.c * sol.value(self.x) * sol.value(self.y)
    }
}

/// A quadratic pressure-loss equality `drop = coeff·flow²`, kept in
/// original form for the relaxation layer (which keeps only the convex
/// side `drop ≥ coeff·flow²`) and the residual evaluators.
#[derive(Clone, Debug)]
pub struct QuadRelation {
    pub id: usize,
    /// Pressure-difference expression (Pa).
    pub drop: LinExpr,
    pub flow: VarId,
    /// Loss coefficient (Pa·s²/kg²), strictly positive.
    pub coeff: f64,
    pub label: String,
    pub period: usize,
}

/// A pump's convex operating region `Δp ≤ shutoff − curve·m²` with
/// `Δp ≥ 0` (the zero-flow intercept `shutoff` is the full-speed shutoff
/// head expressed in Pa).
#[derive(Clone, Debug)]
pub struct PumpRegion {
    pub id: usize,
    pub dp: VarId,
    pub flow: VarId,
    /// c_Pa·γ¹ (Pa).
    pub shutoff: f64,
    /// c_Pa·γ²/ρ_w² (Pa·s²/kg²).
    pub curve: f64,
    pub label: String,
    pub period: usize,
}

/// Collected nonconvex relations of a built model: bilinear products,
/// quadratic pressure-loss equalities, and pump operating regions.
#[derive(Clone, Debug, Default)]
pub struct BilinearRegistry {
    terms: Vec<BilinearTerm>,
    quadratics: Vec<QuadRelation>,
    pumps: Vec<PumpRegion>,
}

impl BilinearRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `z = c·x·y`; returns the term id.
    pub fn register(
        &mut self,
        z: VarId,
        x: VarId,
        y: VarId,
        c: f64,
        family: TermFamily,
        label: impl Into<String>,
        period: usize,
    ) -> usize {
        let id = self.terms.len();
        self.terms.push(BilinearTerm {
            id,
            z,
            x,
            y,
            c,
            family,
            label: label.into(),
            period,
        });
        id
    }

    /// Registers `drop = coeff·flow²`; returns the relation id.
    pub fn register_quadratic(
        &mut self,
        drop: LinExpr,
        flow: VarId,
        coeff: f64,
        label: impl Into<String>,
        period: usize,
    ) -> usize {
        let id = self.quadratics.len();
        self.quadratics.push(QuadRelation {
            id,
            drop,
            flow,
            coeff,
            label: label.into(),
            period,
        });
        id
    }

    /// Registers a pump operating region; returns its id.
    pub fn register_pump(
        &mut self,
        dp: VarId,
        flow: VarId,
        shutoff: f64,
        curve: f64,
        label: impl Into<String>,
        period: usize,
    ) -> usize {
        let id = self.pumps.len();
        self.pumps.push(PumpRegion {
            id,
            dp,
            flow,
            shutoff,
            curve,
            label: label.into(),
            period,
        });
        id
    }

    pub fn terms(&self) -> &[BilinearTerm] {
        &self.terms
    }

    pub fn quadratics(&self) -> &[QuadRelation] {
        &self.quadratics
    }

    pub fn pumps(&self) -> &[PumpRegion] {
        &self.pumps
    }

    /// Number of registered bilinear products.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms that are still genuinely bilinear under the program's current
    /// bounds: both factors have nonzero width. A term whose factor is
    /// pinned (lower bound = upper bound) has collapsed to a linear
    /// relation — after feasibility recovery fixes all flows, this count
    /// drops to zero.
    pub fn active_terms(&self, program: &ConicProgram) -> usize {
        self.terms
            .iter()
            .filter(|t| {
                let (xl, xu) = program.bounds(t.x);
                let (yl, yu) = program.bounds(t.y);
                xl != xu && yl != yu
            })
            .count()
    }

    /// Count of terms per family.
    pub fn family_count(&self, family: TermFamily) -> usize {
        self.terms.iter().filter(|t| t.family == family).count()
    }
}

/// One evaluated constraint residual.
///
/// `value` is a violation measure: two-sided equalities report an absolute
/// (or relative, where noted) deviation, always ≥ 0; one-sided relations
/// report a signed slack where positive means violated and negative means
/// over-satisfied (allowed).
#[derive(Clone, Debug)]
pub struct ResidualEntry {
    /// Constraint family, e.g. `p-balance`, `major-loss-supply`, `mixing-s`.
    pub family: &'static str,
    /// Element tag, e.g. `bus 7`, `pipe 2-3`, `node 20`.
    pub label: String,
    pub period: usize,
    pub value: f64,
}

/// All residuals of one model block (or of the merged model).
#[derive(Clone, Debug, Default)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, family: &'static str, label: impl Into<String>, period: usize, value: f64) {
        self.entries.push(ResidualEntry {
            family,
            label: label.into(),
            period,
            value,
        });
    }

    /// Worst violation over all entries (−∞ when empty). With the signed
    /// convention, a report of a feasible point satisfies `worst() ≤ tol`
    /// even when one-sided relations carry (negative) slack.
    pub fn worst(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst violation within one family (−∞ when the family is absent).
    pub fn family_worst(&self, family: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.family == family)
            .map(|e| e.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The entry attaining `worst()`.
    pub fn worst_entry(&self) -> Option<&ResidualEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// Folds another report into this one.
    pub fn merge(&mut self, other: ResidualReport) {
        self.entries.extend(other.entries);
    }
}

/// Relative deviation between two sides of an equality, guarded for small
/// magnitudes: |a − b| / max(1, |a|, |b|).
pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}
