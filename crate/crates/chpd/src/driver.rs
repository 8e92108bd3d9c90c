//! Dispatch orchestration: the single-shot convex solve, the adaptive
//! partition-refinement loop, feasibility recovery by flow fixing, and the
//! constant-flow benchmark.
//!
//! Every entry point follows the same skeleton — build the model once,
//! convexify it with [`relax_all`], solve with the `conic` crate — and they
//! differ only in how the nonconvex gap is closed:
//!
//! - [`solve_dispatch_convex`] keeps a single partition everywhere (a pure
//!   SOCP), then calls [`recover_feasible`];
//! - [`adaptive_solve`] runs the refinement loop: solve the relaxed
//!   mixed-integer program, measure each product's violation rate, split
//!   the domain of the worst term, warm-start the next round, and keep the
//!   best recovered incumbent;
//! - [`solve_constant_flow`] skips relaxation quality entirely by pinning
//!   a whole flow regime up front, the operating practice the optimized
//!   modes are benchmarked against.
//!
//! Recovery exploits a property of the model layer: envelopes read factor
//! bounds from the program, so pinning every mass flow (pipes, source
//! injections, load draws, and the mixing aggregates) collapses all
//! product envelopes to exact lines without a rebuild. The remaining
//! pressure slack is steered onto the loss curves by a small objective
//! penalty, and the candidate only counts as feasible after the original
//! (unrelaxed) residuals come back at or below [`RESIDUAL_TOL`].

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use conic::{
    solve_continuous, solve_misocp, BackendError, ClarabelBackend, ConicProgram, MisocpSettings,
    Solution, SolveStats, SolveStatus, VarId,
};

use crate::case::{Case, DeviceKind, PipeKind};
use crate::model::{
    build_hydraulic_relations, build_power_constraints, build_thermal_relations,
    hydraulic_residuals, power_residuals, thermal_residuals, BilinearRegistry, BuildError,
    HydraulicVarHandles, PowerVarHandles, ResidualReport, ThermalVarHandles,
};
use crate::relax::{relax_all, EnvelopeBlock, PartitionState, DEFAULT_PARTITION_CAP};

/// A recovered point passes only when the worst original-constraint
/// residual is at or below this.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Violation rates divide by `max(|z*|, this)` so near-zero products do
/// not blow up the rate.
const GAP_DENOMINATOR_FLOOR: f64 = 1e-3;

/// Clearance (Pa) above each loss curve enforced during recovery. The
/// residual convention accepts drops above the curve but none below, and
/// the penalty parks them exactly on the boundary, where interior-point
/// noise falls on either side. One pascal is far above that noise and
/// far below the bar-scale operating pressures it nudges.
const RECOVERY_MARGIN: f64 = 1.0;

/// Hard failures of a dispatch entry point. A failed feasibility recovery
/// is not among them — the solves report that through
/// [`DispatchStatus::RelaxedOnly`] instead.
#[derive(Debug)]
pub enum DispatchError {
    /// The case could not be turned into a program.
    Build(BuildError),
    /// The backend failed (numerics, unboundedness, or a limit with no
    /// usable point).
    Solver(String),
    /// A problem was proven infeasible: the relaxation itself, or a
    /// fixed-flow subproblem at the requested flows.
    Infeasible(String),
}

impl fmt::Display for DispatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DispatchError::Build(e) => write!(f, "model build failed: {e}"),
            DispatchError::Solver(msg) => write!(f, "solver failure: {msg}"),
            DispatchError::Infeasible(msg) => write!(f, "infeasible: {msg}"),
        }
    }
}

impl std::error::Error for DispatchError {}

impl From<BuildError> for DispatchError {
    fn from(e: BuildError) -> Self {
        DispatchError::Build(e)
    }
}

impl From<BackendError> for DispatchError {
    fn from(e: BackendError) -> Self {
        DispatchError::Solver(e.to_string())
    }
}

/// The built model: linear program, product registry, and all variable
/// handles.
pub struct ModelStack {
    pub program: ConicProgram,
    pub registry: BilinearRegistry,
    pub hydraulics: HydraulicVarHandles,
    pub power: PowerVarHandles,
    pub thermal: ThermalVarHandles,
}

/// Builds the full linear skeleton (hydraulic, power, thermal) of a case.
pub fn build_model(case: &Case) -> Result<ModelStack, BuildError> {
    let mut program = ConicProgram::new();
    let mut registry = BilinearRegistry::new();
    let hydraulics = build_hydraulic_relations(case, &mut program, &mut registry)?;
    let power = build_power_constraints(case, &mut program, &hydraulics)?;
    let thermal = build_thermal_relations(case, &mut program, &mut registry, &hydraulics, &power)?;
    Ok(ModelStack {
        program,
        registry,
        hydraulics,
        power,
        thermal,
    })
}

/// How a dispatch run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum DispatchStatus {
    /// A recovered point passed the original-residual check.
    Feasible,
    /// Only the relaxed solution is available; the reason recovery failed.
    RelaxedOnly(String),
}

impl DispatchStatus {
    pub fn is_feasible(&self) -> bool {
        matches!(self, DispatchStatus::Feasible)
    }
}

/// One round of the refinement loop (the convex solve logs exactly one).
#[derive(Clone, Debug)]
pub struct IterationLog {
    /// 1-based iteration counter.
    pub iteration: usize,
    /// Proven lower bound of this iteration's relaxation — the value all
    /// soundness claims are made about.
    pub relaxed_bound: f64,
    /// Objective of the relaxed incumbent (equals the bound for a
    /// continuous solve; may sit up to the MIP gap above it otherwise).
    pub incumbent_objective: f64,
    /// Dispatch cost of this iteration's recovered point, if recovery
    /// succeeded.
    pub recovered_objective: Option<f64>,
    /// Best recovered cost found so far (non-increasing down the trace).
    pub best_objective: Option<f64>,
    /// Largest absolute violation rate over all products, in percent.
    pub max_gap_percent: f64,
    /// Label of the term attaining it.
    pub max_gap_label: String,
    /// Term whose partition count grew after this iteration (`None` on a
    /// fixpoint, a cap-out, or the final iteration of a budget).
    pub refined_term: Option<usize>,
    pub refined_label: Option<String>,
    /// That term's partition count after the increment.
    pub partitions_after: Option<usize>,
    /// Binary variables in this iteration's relaxation.
    pub binaries: usize,
    /// Wall-clock seconds elapsed when the iteration finished.
    pub wall_seconds: f64,
}

/// Everything a dispatch run produces.
#[derive(Clone, Debug)]
pub struct DispatchResult {
    pub status: DispatchStatus,
    /// Tightest proven lower bound on the original optimum seen across all
    /// iterations.
    pub relaxed_objective: f64,
    /// Dispatch cost of the best recovered point.
    pub recovered_objective: Option<f64>,
    /// Per-period operating point of the reported solution (the best
    /// recovered point, or the relaxed one under `RelaxedOnly`).
    pub schedules: Schedules,
    /// Original-constraint residuals of the best recovered point.
    pub residuals: Option<ResidualReport>,
    pub trace: Vec<IterationLog>,
    pub wall_seconds: f64,
}

/// Per-period operating point, in natural units.
#[derive(Clone, Debug, Default)]
pub struct Schedules {
    pub periods: usize,
    pub step_hours: f64,
    pub devices: Vec<DeviceSchedule>,
    pub nodes: Vec<NodeSchedule>,
    pub pipes: Vec<PipeSchedule>,
}

#[derive(Clone, Debug)]
pub struct DeviceSchedule {
    pub id: String,
    /// Electric output (consumption for heat pumps), MW.
    pub p_mw: Vec<f64>,
    /// Reactive output, MVAr; absent for devices without reactive handles.
    pub q_mvar: Option<Vec<f64>>,
    /// Heat output (delivery for heat pumps), MW.
    pub heat_mw: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct NodeSchedule {
    pub id: usize,
    /// Mixed supply / return temperature, °C.
    pub ts_c: Vec<f64>,
    pub tr_c: Vec<f64>,
    /// Supply / return pressure, Pa.
    pub ps_pa: Vec<f64>,
    pub pr_pa: Vec<f64>,
    /// Source injection, kg/s.
    pub inflow_kg_s: Option<Vec<f64>>,
    /// Load draw, kg/s.
    pub outflow_kg_s: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct PipeSchedule {
    pub from: usize,
    pub to: usize,
    /// Mass flow, kg/s (shared by the supply and return networks).
    pub flow_kg_s: Vec<f64>,
    /// Outlet temperatures, °C.
    pub supply_out_c: Vec<f64>,
    pub return_out_c: Vec<f64>,
    /// Valve drop or pump rise, Pa.
    pub dp_pa: Option<Vec<f64>>,
    /// Pump electric draw, MW.
    pub pump_mw: Option<Vec<f64>>,
}

/// A flow regime for the constant-flow benchmark.
#[derive(Clone, Debug)]
pub enum FlowSetting {
    /// Total network flow in kg/s, shared among loads in proportion to
    /// their peak demand and among sources in proportion to their heat
    /// capacity.
    Total(f64),
    /// Explicit flow per pipe, keyed `(from, to)`; source and load flows
    /// follow from continuity.
    PerPipe(HashMap<(usize, usize), f64>),
}

/// Knobs of the adaptive loop.
#[derive(Clone, Debug)]
pub struct AdaptiveSettings {
    /// Wall-clock budget for the whole loop.
    pub time_limit: Duration,
    /// Largest partition count a single term may reach.
    pub partition_cap: usize,
    /// Stop early when the worst violation rate (percent) drops below
    /// this.
    pub gap_stop: f64,
    /// Relative MIP gap for each iteration's mixed-integer solve.
    pub mip_gap: f64,
    /// Optional iteration cap.
    pub max_iterations: Option<usize>,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(600),
            partition_cap: DEFAULT_PARTITION_CAP,
            gap_stop: 1e-6,
            mip_gap: 1e-4,
            max_iterations: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Flow regimes and continuity
// ---------------------------------------------------------------------------

/// A complete flow assignment: one value per pipe / source / load and
/// period.
#[derive(Clone, Debug)]
struct FlowRegime {
    pipes: Vec<Vec<f64>>,
    sources: Vec<Option<Vec<f64>>>,
    loads: Vec<Option<Vec<f64>>>,
}

/// Solves pipe flows on a tree network from per-node net injections
/// (source inflow minus load draw), by peeling leaves. Fails when the
/// network has cycles.
fn continuity_flows(case: &Case, boundary: &[f64]) -> Result<Vec<f64>, DispatchError> {
    let nodes = &case.dhs.nodes;
    let pipes = &case.dhs.pipes;
    let pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

    // incident[v] = (pipe index, +1 when the pipe leaves v).
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
    for (p, pipe) in pipes.iter().enumerate() {
        incident[pos[&pipe.from]].push((p, 1.0));
        incident[pos[&pipe.to]].push((p, -1.0));
    }

    let mut surplus = boundary.to_vec();
    let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut flow = vec![f64::NAN; pipes.len()];
    let mut resolved = vec![false; pipes.len()];
    let mut queue: Vec<usize> = (0..nodes.len()).filter(|&v| degree[v] == 1).collect();

    while let Some(v) = queue.pop() {
        if degree[v] != 1 {
            continue;
        }
        let &(p, sign) = incident[v]
            .iter()
            .find(|(p, _)| !resolved[*p])
            .expect("degree-one node has an unresolved pipe");
        // Leaving pipe carries the node's surplus; an entering pipe must
        // deliver its deficit.
        flow[p] = sign * surplus[v];
        resolved[p] = true;
        degree[v] = 0;
        let pipe = &pipes[p];
        let w = if pos[&pipe.from] == v {
            pos[&pipe.to]
        } else {
            pos[&pipe.from]
        };
        let w_sign = if pos[&pipe.from] == w { 1.0 } else { -1.0 };
        surplus[w] -= w_sign * flow[p];
        degree[w] -= 1;
        if degree[w] == 1 {
            queue.push(w);
        }
    }

    if resolved.iter().any(|r| !r) {
        return Err(DispatchError::Build(BuildError::Data(
            "flow routing by continuity needs a tree-shaped heat network; \
             give explicit per-pipe flows for meshed layouts"
                .into(),
        )));
    }
    Ok(flow)
}

/// Extracts and repairs the flow regime of a relaxed solution: boundary
/// flows are taken from the solution (sources rescaled so injections match
/// draws exactly) and pipe flows re-routed by continuity, so the pinned
/// regime is internally consistent to machine precision.
fn regime_from_solution(
    case: &Case,
    stack: &ModelStack,
    solution: &Solution,
) -> Result<FlowRegime, DispatchError> {
    let periods = case.grid.periods;
    let nodes = &case.dhs.nodes;
    let mut regime = FlowRegime {
        pipes: vec![vec![0.0; periods]; case.dhs.pipes.len()],
        sources: stack
            .hydraulics
            .source_inflow
            .iter()
            .map(|h| h.as_ref().map(|_| vec![0.0; periods]))
            .collect(),
        loads: stack
            .hydraulics
            .load_outflow
            .iter()
            .map(|h| h.as_ref().map(|_| vec![0.0; periods]))
            .collect(),
    };

    for t in 0..periods {
        let mut draws = 0.0;
        let mut injections = 0.0;
        for n in 0..nodes.len() {
            if let Some(h) = &stack.hydraulics.load_outflow[n] {
                let m = solution.value(h[t]);
                regime.loads[n].as_mut().unwrap()[t] = m;
                draws += m;
            }
            if let Some(h) = &stack.hydraulics.source_inflow[n] {
                injections += solution.value(h[t]);
            }
        }
        let scale = if injections.abs() > 1e-12 {
            draws / injections
        } else {
            1.0
        };
        let mut boundary = vec![0.0; nodes.len()];
        for n in 0..nodes.len() {
            if let Some(h) = &stack.hydraulics.source_inflow[n] {
                let m = solution.value(h[t]) * scale;
                regime.sources[n].as_mut().unwrap()[t] = m;
                boundary[n] += m;
            }
            if let Some(series) = &regime.loads[n] {
                boundary[n] -= series[t];
            }
        }
        let flows = continuity_flows(case, &boundary)?;
        for (p, f) in flows.into_iter().enumerate() {
            regime.pipes[p][t] = f;
        }
    }
    Ok(regime)
}

/// Builds the constant-over-time regime of a [`FlowSetting`], validating
/// it against every flow box.
fn constant_regime(case: &Case, setting: &FlowSetting) -> Result<FlowRegime, DispatchError> {
    let nodes = &case.dhs.nodes;
    let periods = case.grid.periods;
    let mut load_flow = vec![None; nodes.len()];
    let mut source_flow = vec![None; nodes.len()];
    let pipe_flow: Vec<f64>;

    match setting {
        FlowSetting::Total(total) => {
            if !(total.is_finite() && *total > 0.0) {
                return Err(DispatchError::Build(BuildError::Data(format!(
                    "constant-flow setting must be a positive total flow, got {total}"
                ))));
            }
            let peaks: Vec<f64> = nodes
                .iter()
                .map(|n| n.demand.iter().copied().fold(0.0, f64::max))
                .collect();
            let peak_sum: f64 = nodes
                .iter()
                .zip(&peaks)
                .filter(|(n, _)| n.is_load())
                .map(|(_, p)| p)
                .sum();
            if peak_sum <= 0.0 {
                return Err(DispatchError::Build(BuildError::Data(
                    "constant-flow setting needs at least one load with positive demand".into(),
                )));
            }
            let mut capacity = vec![0.0; nodes.len()];
            for device in &case.eps.devices {
                let (node, factor) = match device.kind {
                    DeviceKind::Chp {
                        power_to_heat,
                        node,
                    } => (node, power_to_heat),
                    DeviceKind::HeatPump { cop, node } => (node, cop),
                    _ => continue,
                };
                if let Some(n) = case.node_pos(node) {
                    capacity[n] += factor * device.p_max;
                }
            }
            let capacity_sum: f64 = capacity.iter().sum();
            if capacity_sum <= 0.0 {
                return Err(DispatchError::Build(BuildError::Data(
                    "constant-flow setting needs at least one heat-producing device".into(),
                )));
            }
            for (n, node) in nodes.iter().enumerate() {
                if let Some(load) = &node.load {
                    let m = total * peaks[n] / peak_sum;
                    if m < load.m_out_min - 1e-9 || m > load.m_out_max + 1e-9 {
                        return Err(DispatchError::Infeasible(format!(
                            "constant flow {total} kg/s puts node {} at {m:.3} kg/s, \
                             outside its draw range [{}, {}]",
                            node.id, load.m_out_min, load.m_out_max
                        )));
                    }
                    load_flow[n] = Some(m);
                }
                if let Some(source) = &node.source {
                    let m = total * capacity[n] / capacity_sum;
                    if m < source.m_in_min - 1e-9 || m > source.m_in_max + 1e-9 {
                        return Err(DispatchError::Infeasible(format!(
                            "constant flow {total} kg/s puts source {} at {m:.3} kg/s, \
                             outside its injection range [{}, {}]",
                            node.id, source.m_in_min, source.m_in_max
                        )));
                    }
                    source_flow[n] = Some(m);
                }
            }
            let boundary: Vec<f64> = (0..nodes.len())
                .map(|n| source_flow[n].unwrap_or(0.0) - load_flow[n].unwrap_or(0.0))
                .collect();
            pipe_flow = continuity_flows(case, &boundary)?;
        }
        FlowSetting::PerPipe(map) => {
            let mut flows = Vec::with_capacity(case.dhs.pipes.len());
            for pipe in &case.dhs.pipes {
                let Some(&f) = map.get(&(pipe.from, pipe.to)) else {
                    return Err(DispatchError::Build(BuildError::Data(format!(
                        "per-pipe flow map misses pipe {}-{}",
                        pipe.from, pipe.to
                    ))));
                };
                flows.push(f);
            }
            // Boundary flows follow from continuity at each node.
            for (n, node) in nodes.iter().enumerate() {
                let mut net = 0.0;
                for (p, pipe) in case.dhs.pipes.iter().enumerate() {
                    if pipe.to == node.id {
                        net += flows[p];
                    }
                    if pipe.from == node.id {
                        net -= flows[p];
                    }
                }
                if node.is_load() {
                    if net < -1e-9 {
                        return Err(DispatchError::Infeasible(format!(
                            "per-pipe flows push {net:.3} kg/s backwards through load {}",
                            node.id
                        )));
                    }
                    load_flow[n] = Some(net.max(0.0));
                } else if node.is_source() {
                    if net > 1e-9 {
                        return Err(DispatchError::Infeasible(format!(
                            "per-pipe flows push {net:.3} kg/s backwards into source {}",
                            node.id
                        )));
                    }
                    source_flow[n] = Some((-net).max(0.0));
                } else if net.abs() > 1e-9 {
                    return Err(DispatchError::Infeasible(format!(
                        "per-pipe flows leave {net:.3} kg/s unbalanced at junction {}",
                        node.id
                    )));
                }
            }
            pipe_flow = flows;
        }
    }

    for (p, pipe) in case.dhs.pipes.iter().enumerate() {
        let f = pipe_flow[p];
        if f < pipe.m_min - 1e-9 || f > pipe.m_max + 1e-9 {
            return Err(DispatchError::Infeasible(format!(
                "routed flow {f:.3} kg/s on pipe {}-{} falls outside its range [{}, {}]",
                pipe.from, pipe.to, pipe.m_min, pipe.m_max
            )));
        }
    }

    Ok(FlowRegime {
        pipes: pipe_flow.into_iter().map(|f| vec![f; periods]).collect(),
        sources: source_flow
            .into_iter()
            .map(|m| m.map(|m| vec![m; periods]))
            .collect(),
        loads: load_flow
            .into_iter()
            .map(|m| m.map(|m| vec![m; periods]))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Fixed-flow solve (recovery core)
// ---------------------------------------------------------------------------

struct FixedOutcome {
    /// Dispatch cost (the penalty term excluded).
    cost: f64,
    solution: Solution,
    residuals: ResidualReport,
    stack: ModelStack,
}

/// Solves the dispatch with a pinned flow regime: every product envelope
/// collapses to an exact line, pressure drops are steered onto the loss
/// curves, and the result must pass the original-residual check.
fn solve_fixed_flows(case: &Case, regime: &FlowRegime) -> Result<FixedOutcome, DispatchError> {
    let mut stack = build_model(case)?;
    let periods = case.grid.periods;

    let mut pinned: HashMap<VarId, f64> = HashMap::new();
    for (p, series) in regime.pipes.iter().enumerate() {
        for t in 0..periods {
            pinned.insert(stack.hydraulics.pipe_flow[p][t], series[t]);
        }
    }
    for (n, series) in regime.sources.iter().enumerate() {
        if let (Some(series), Some(vars)) = (series, &stack.hydraulics.source_inflow[n]) {
            for t in 0..periods {
                pinned.insert(vars[t], series[t]);
            }
        }
    }
    for (n, series) in regime.loads.iter().enumerate() {
        if let (Some(series), Some(vars)) = (series, &stack.hydraulics.load_outflow[n]) {
            for t in 0..periods {
                pinned.insert(vars[t], series[t]);
            }
        }
    }
    for (&var, &value) in &pinned {
        stack
            .program
            .set_bounds(var, value, value)
            .map_err(|e| DispatchError::Build(BuildError::Program(e)))?;
    }
    // The mixing aggregates are sums of pinned streams; pin them too so
    // the mixing products lose their last free factor.
    for mix in &stack.thermal.mix_totals {
        let total: f64 = mix.streams.iter().map(|s| pinned[s]).sum();
        stack
            .program
            .set_bounds(mix.total, total, total)
            .map_err(|e| DispatchError::Build(BuildError::Program(e)))?;
    }

    // With every flow pinned, the nonconvexities are gone and the whole
    // relaxation layer turns linear: each product envelope collapses to an
    // exact line, each loss cone to the floor `drop ≥ μm̄²`, each pump
    // region to the cap `Δp ≤ shutoff − curve·m̄²`. The linear forms go in
    // directly — stacking the degenerate cones on top of their own
    // tangents doubles the active set and stalls the interior-point
    // method. The floor carries a margin: the residual convention accepts
    // slack above a loss curve but none below, pump rises are pulled onto
    // their floors by the electric cost, and the margin keeps solver
    // noise off the violated side. No objective term touches the
    // pressures; penalty experiments also stalled the solver.
    for term in stack.registry.terms() {
        crate::relax::mccormick_envelope(&mut stack.program, term)?;
    }
    debug_assert_eq!(
        stack.registry.active_terms(&stack.program),
        0,
        "pinning the flow regime must linearize every product"
    );
    for relation in stack.registry.quadratics() {
        let m = pinned[&relation.flow];
        stack
            .program
            .add_ge(relation.drop.clone(), relation.coeff * m * m + RECOVERY_MARGIN)
            .map_err(|e| DispatchError::Build(BuildError::Program(e)))?;
    }
    for region in stack.registry.pumps() {
        let m = pinned[&region.flow];
        stack
            .program
            .add_le(
                conic::LinExpr::var(region.dp),
                region.shutoff - region.curve * m * m,
            )
            .map_err(|e| DispatchError::Build(BuildError::Program(e)))?;
    }

    let backend = ClarabelBackend::default();
    let solution = solve_continuous(&stack.program, &backend)?;
    match solution.status {
        SolveStatus::Optimal | SolveStatus::Feasible => {}
        SolveStatus::Infeasible => {
            return Err(DispatchError::Infeasible(
                "fixed-flow subproblem is infeasible: the pinned flow regime admits no \
                 hydraulically and thermally consistent operating point"
                    .into(),
            ));
        }
        other => {
            return Err(DispatchError::Solver(format!(
                "fixed-flow subproblem ended with status {other:?}"
            )));
        }
    }

    let residuals = verify_original(case, &stack, &solution);
    let worst = residuals.worst();
    if worst > RESIDUAL_TOL {
        let entry = residuals.worst_entry().expect("nonempty report");
        return Err(DispatchError::Infeasible(format!(
            "recovered point fails the original-constraint check: {} residual {:.3e} on {} \
             (period {})",
            entry.family, entry.value, entry.label, entry.period
        )));
    }

    let cost = stack.power.cost.eval(&solution.values);
    Ok(FixedOutcome {
        cost,
        solution,
        residuals,
        stack,
    })
}

/// Evaluates every original (unrelaxed) constraint family at a point.
pub fn verify_original(case: &Case, stack: &ModelStack, solution: &Solution) -> ResidualReport {
    let mut report = hydraulic_residuals(case, &stack.hydraulics, solution);
    report.merge(power_residuals(
        case,
        &stack.power,
        &stack.hydraulics,
        solution,
    ));
    report.merge(thermal_residuals(
        case,
        &stack.thermal,
        &stack.hydraulics,
        &stack.power,
        solution,
    ));
    report
}

// ---------------------------------------------------------------------------
// Violation rates
// ---------------------------------------------------------------------------

/// Violation-rate scan of a relaxed point.
struct GapScan {
    /// Signed rate per term (percent): `(z − c·x·y) / max(|z|, floor) · 100`.
    rates: Vec<f64>,
    /// Largest |rate| and the term attaining it.
    worst_percent: f64,
    worst_term: Option<usize>,
    /// Largest |z − c·x·y| in natural units.
    worst_natural: f64,
}

fn scan_gaps(registry: &BilinearRegistry, solution: &Solution) -> GapScan {
    let mut scan = GapScan {
        rates: Vec::with_capacity(registry.len()),
        worst_percent: 0.0,
        worst_term: None,
        worst_natural: 0.0,
    };
    for term in registry.terms() {
        let violation = term.residual(solution);
        let z = solution.value(term.z);
        let rate = violation / z.abs().max(GAP_DENOMINATOR_FLOOR) * 100.0;
        if rate.abs() > scan.worst_percent {
            scan.worst_percent = rate.abs();
            scan.worst_term = Some(term.id);
        }
        scan.worst_natural = scan.worst_natural.max(violation.abs());
        scan.rates.push(rate);
    }
    scan
}

// ---------------------------------------------------------------------------
// Warm starts
// ---------------------------------------------------------------------------

/// Builds a warm-start vector for a freshly relaxed program from the
/// previous iteration's solution: base-model values carry over by position
/// (relaxation only appends), and each envelope block gets the one-hot
/// partition indicators and interpolation weights of the cell containing
/// the previous `(x, y)`.
fn warm_vector(
    program: &ConicProgram,
    base_len: usize,
    previous: &Solution,
    blocks: &[EnvelopeBlock],
    registry: &BilinearRegistry,
) -> Vec<f64> {
    let pos: HashMap<VarId, usize> = program.var_ids().enumerate().map(|(i, v)| (v, i)).collect();
    let mut warm = vec![0.0; program.num_vars()];
    warm[..base_len].copy_from_slice(&previous.values[..base_len]);

    for block in blocks {
        let term = &registry.terms()[block.term];
        let x = previous.value(term.x);
        let y = previous.value(term.y);
        let n = block.n;
        let cell = |grid: &[f64], v: f64| -> usize {
            let width = grid[1] - grid[0];
            if width <= 0.0 {
                0
            } else {
                (((v - grid[0]) / width) as usize).min(n - 1)
            }
        };
        let (ci, cj) = (cell(&block.grid_x, x), cell(&block.grid_y, y));
        let frac = |grid: &[f64], i: usize, v: f64| -> f64 {
            if grid[i + 1] > grid[i] {
                ((v - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let (s, u) = (frac(&block.grid_x, ci, x), frac(&block.grid_y, cj, y));
        warm[pos[&block.alpha[ci]]] = 1.0;
        warm[pos[&block.beta[cj]]] = 1.0;
        for (di, dj, w) in [
            (0, 0, (1.0 - s) * (1.0 - u)),
            (0, 1, (1.0 - s) * u),
            (1, 0, s * (1.0 - u)),
            (1, 1, s * u),
        ] {
            warm[pos[&block.weights[(ci + di) * (n + 1) + (cj + dj)]]] = w;
        }
    }
    warm
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Single-shot convex dispatch: relax with one partition everywhere (a
/// pure SOCP), solve, and recover a feasible point by fixing flows.
pub fn solve_dispatch_convex(case: &Case) -> Result<DispatchResult, DispatchError> {
    let start = Instant::now();
    let stack = build_model(case)?;
    let mut relaxed_program = stack.program.clone();
    relax_all(
        &mut relaxed_program,
        &stack.registry,
        &PartitionState::uniform(1),
    )?;

    let backend = ClarabelBackend::default();
    let solution = solve_continuous(&relaxed_program, &backend)?;
    match solution.status {
        SolveStatus::Optimal | SolveStatus::Feasible => {}
        SolveStatus::Infeasible => {
            return Err(DispatchError::Infeasible(
                "the convex relaxation is infeasible: the case has no operating point even \
                 with every product constraint outer-approximated"
                    .into(),
            ));
        }
        other => {
            return Err(DispatchError::Solver(format!(
                "relaxed solve ended with status {other:?}"
            )));
        }
    }

    let scan = scan_gaps(&stack.registry, &solution);
    let bound = if solution.bound.is_finite() {
        solution.bound
    } else {
        solution.objective
    };

    let recovery = regime_from_solution(case, &stack, &solution)
        .and_then(|regime| solve_fixed_flows(case, &regime));

    let mut log = IterationLog {
        iteration: 1,
        relaxed_bound: bound,
        incumbent_objective: solution.objective,
        recovered_objective: None,
        best_objective: None,
        max_gap_percent: scan.worst_percent,
        max_gap_label: scan
            .worst_term
            .map(|id| stack.registry.terms()[id].label.clone())
            .unwrap_or_default(),
        refined_term: None,
        refined_label: None,
        partitions_after: None,
        binaries: 0,
        wall_seconds: 0.0,
    };

    let result = match recovery {
        Ok(outcome) => {
            log.recovered_objective = Some(outcome.cost);
            log.best_objective = Some(outcome.cost);
            log.wall_seconds = start.elapsed().as_secs_f64();
            DispatchResult {
                status: DispatchStatus::Feasible,
                relaxed_objective: bound,
                recovered_objective: Some(outcome.cost),
                schedules: extract_schedules(case, &outcome.stack, &outcome.solution),
                residuals: Some(outcome.residuals),
                trace: vec![log],
                wall_seconds: start.elapsed().as_secs_f64(),
            }
        }
        Err(DispatchError::Infeasible(reason)) => {
            log.wall_seconds = start.elapsed().as_secs_f64();
            DispatchResult {
                status: DispatchStatus::RelaxedOnly(reason),
                relaxed_objective: bound,
                recovered_objective: None,
                schedules: extract_schedules(case, &stack, &solution),
                residuals: None,
                trace: vec![log],
                wall_seconds: start.elapsed().as_secs_f64(),
            }
        }
        Err(other) => return Err(other),
    };
    Ok(result)
}

/// Uniform-partition dispatch: relax every product with `partitions`
/// pieces per axis, solve the mixed-integer program, and recover.
pub fn solve_dispatch_misocp(
    case: &Case,
    partitions: usize,
    settings: &MisocpSettings,
) -> Result<DispatchResult, DispatchError> {
    let start = Instant::now();
    let stack = build_model(case)?;
    let state = PartitionState::uniform(partitions).with_cap(partitions.max(DEFAULT_PARTITION_CAP));
    let mut relaxed_program = stack.program.clone();
    let report = relax_all(&mut relaxed_program, &stack.registry, &state)?;

    let backend = ClarabelBackend::default();
    let solution = solve_misocp(&relaxed_program, &backend, None, settings)?;
    if solution.values.is_empty() {
        return match solution.status {
            SolveStatus::Infeasible => Err(DispatchError::Infeasible(
                "the partitioned relaxation is infeasible".into(),
            )),
            other => Err(DispatchError::Solver(format!(
                "partitioned solve ended with status {other:?} and no incumbent"
            ))),
        };
    }

    let scan = scan_gaps(&stack.registry, &solution);
    let recovery = regime_from_solution(case, &stack, &solution)
        .and_then(|regime| solve_fixed_flows(case, &regime));
    let mut log = IterationLog {
        iteration: 1,
        relaxed_bound: solution.bound,
        incumbent_objective: solution.objective,
        recovered_objective: None,
        best_objective: None,
        max_gap_percent: scan.worst_percent,
        max_gap_label: scan
            .worst_term
            .map(|id| stack.registry.terms()[id].label.clone())
            .unwrap_or_default(),
        refined_term: None,
        refined_label: None,
        partitions_after: None,
        binaries: report.binaries_added,
        wall_seconds: 0.0,
    };

    match recovery {
        Ok(outcome) => {
            log.recovered_objective = Some(outcome.cost);
            log.best_objective = Some(outcome.cost);
            log.wall_seconds = start.elapsed().as_secs_f64();
            Ok(DispatchResult {
                status: DispatchStatus::Feasible,
                relaxed_objective: solution.bound,
                recovered_objective: Some(outcome.cost),
                schedules: extract_schedules(case, &outcome.stack, &outcome.solution),
                residuals: Some(outcome.residuals),
                trace: vec![log],
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        }
        Err(DispatchError::Infeasible(reason)) => {
            log.wall_seconds = start.elapsed().as_secs_f64();
            Ok(DispatchResult {
                status: DispatchStatus::RelaxedOnly(reason),
                relaxed_objective: solution.bound,
                recovered_objective: None,
                schedules: extract_schedules(case, &stack, &solution),
                residuals: None,
                trace: vec![log],
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        }
        Err(other) => Err(other),
    }
}

/// Recovers a feasible dispatch from a relaxed solution by fixing every
/// mass flow to the (continuity-repaired) relaxed values and re-solving.
pub fn recover_feasible(case: &Case, relaxed: &Solution) -> Result<DispatchResult, DispatchError> {
    let start = Instant::now();
    let stack = build_model(case)?;
    if relaxed.values.len() < stack.program.num_vars() {
        return Err(DispatchError::Build(BuildError::Data(format!(
            "relaxed solution carries {} values but the case builds {} base variables",
            relaxed.values.len(),
            stack.program.num_vars()
        ))));
    }
    let regime = regime_from_solution(case, &stack, relaxed)?;
    let outcome = solve_fixed_flows(case, &regime)?;
    let bound = if relaxed.bound.is_finite() {
        relaxed.bound
    } else {
        relaxed.objective
    };
    Ok(DispatchResult {
        status: DispatchStatus::Feasible,
        relaxed_objective: bound,
        recovered_objective: Some(outcome.cost),
        schedules: extract_schedules(case, &outcome.stack, &outcome.solution),
        residuals: Some(outcome.residuals),
        trace: Vec::new(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Benchmark mode: dispatch under a fixed flow regime (the operating
/// practice of running networks at constant pre-set flows).
pub fn solve_constant_flow(
    case: &Case,
    setting: &FlowSetting,
) -> Result<DispatchResult, DispatchError> {
    let start = Instant::now();
    let regime = constant_regime(case, setting)?;
    let outcome = solve_fixed_flows(case, &regime)?;
    Ok(DispatchResult {
        status: DispatchStatus::Feasible,
        // With flows given, the subproblem is exact: its optimum is its
        // own bound.
        relaxed_objective: outcome.cost,
        recovered_objective: Some(outcome.cost),
        schedules: extract_schedules(case, &outcome.stack, &outcome.solution),
        residuals: Some(outcome.residuals),
        trace: Vec::new(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Adaptive dispatch: iteratively tighten the relaxation by splitting the
/// domain of the worst-violated product, recovering a feasible incumbent
/// each round.
pub fn adaptive_solve(
    case: &Case,
    settings: &AdaptiveSettings,
) -> Result<DispatchResult, DispatchError> {
    let start = Instant::now();
    let stack = build_model(case)?;
    let base_len = stack.program.num_vars();
    let backend = ClarabelBackend::default();

    let mut state = PartitionState::uniform(1).with_cap(settings.partition_cap);
    let mut previous: Option<Solution> = None;
    let mut best: Option<FixedOutcome> = None;
    let mut last_relaxed: Option<Solution> = None;
    let mut tightest_bound = f64::NEG_INFINITY;
    let mut trace: Vec<IterationLog> = Vec::new();
    let mut iteration = 0usize;

    loop {
        if start.elapsed() >= settings.time_limit {
            break;
        }
        if let Some(cap) = settings.max_iterations {
            if iteration >= cap {
                break;
            }
        }
        iteration += 1;

        let mut relaxed_program = stack.program.clone();
        let report = relax_all(&mut relaxed_program, &stack.registry, &state)?;
        let warm = previous
            .as_ref()
            .map(|sol| warm_vector(&relaxed_program, base_len, sol, &report.blocks, &stack.registry));
        let remaining = settings.time_limit.saturating_sub(start.elapsed());
        let misocp = MisocpSettings {
            rel_gap: settings.mip_gap,
            time_limit: Some(remaining),
            ..MisocpSettings::default()
        };
        let solution = solve_misocp(&relaxed_program, &backend, warm.as_deref(), &misocp)?;
        if solution.values.is_empty() {
            if iteration == 1 && solution.status == SolveStatus::Infeasible {
                return Err(DispatchError::Infeasible(
                    "the convex relaxation is infeasible: the case has no operating point even \
                     with every product constraint outer-approximated"
                        .into(),
                ));
            }
            // A limit fired (or the solver failed) before any incumbent:
            // nothing to refine on; keep what previous rounds produced.
            break;
        }
        tightest_bound = tightest_bound.max(solution.bound);

        let scan = scan_gaps(&stack.registry, &solution);
        state.record(scan.worst_natural);

        let recovery = regime_from_solution(case, &stack, &solution)
            .and_then(|regime| solve_fixed_flows(case, &regime));
        let recovered_cost = match recovery {
            Ok(outcome) => {
                let cost = outcome.cost;
                if best.as_ref().map_or(true, |b| cost < b.cost) {
                    best = Some(outcome);
                }
                Some(cost)
            }
            Err(DispatchError::Infeasible(_)) => None,
            Err(other) => return Err(other),
        };

        let mut log = IterationLog {
            iteration,
            relaxed_bound: solution.bound,
            incumbent_objective: solution.objective,
            recovered_objective: recovered_cost,
            best_objective: best.as_ref().map(|b| b.cost),
            max_gap_percent: scan.worst_percent,
            max_gap_label: scan
                .worst_term
                .map(|id| stack.registry.terms()[id].label.clone())
                .unwrap_or_default(),
            refined_term: None,
            refined_label: None,
            partitions_after: None,
            binaries: report.binaries_added,
            wall_seconds: start.elapsed().as_secs_f64(),
        };

        if scan.worst_percent < settings.gap_stop {
            // Fixpoint: the relaxed point already satisfies every product.
            trace.push(log);
            last_relaxed = Some(solution);
            break;
        }

        // Refine the worst-violated term whose cap allows it (ties fall to
        // the lowest id because the scan keeps the first maximum).
        let mut order: Vec<usize> = (0..stack.registry.len()).collect();
        order.sort_by(|&a, &b| {
            scan.rates[b]
                .abs()
                .partial_cmp(&scan.rates[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for id in order {
            if state.increment(id) {
                log.refined_term = Some(id);
                log.refined_label = Some(stack.registry.terms()[id].label.clone());
                log.partitions_after = Some(state.partitions(id));
                break;
            }
        }
        let capped_out = log.refined_term.is_none();
        trace.push(log);
        last_relaxed = Some(solution);
        if capped_out {
            break;
        }
        previous = last_relaxed.clone();
    }

    let wall = start.elapsed().as_secs_f64();
    match best {
        Some(outcome) => Ok(DispatchResult {
            status: DispatchStatus::Feasible,
            relaxed_objective: tightest_bound,
            recovered_objective: Some(outcome.cost),
            schedules: extract_schedules(case, &outcome.stack, &outcome.solution),
            residuals: Some(outcome.residuals),
            trace,
            wall_seconds: wall,
        }),
        None => {
            let relaxed = last_relaxed.ok_or_else(|| {
                DispatchError::Solver(
                    "the time budget expired before the first relaxation finished".into(),
                )
            })?;
            Ok(DispatchResult {
                status: DispatchStatus::RelaxedOnly(
                    "no iteration produced a recoverable flow regime".into(),
                ),
                relaxed_objective: tightest_bound,
                recovered_objective: None,
                schedules: extract_schedules(case, &stack, &relaxed),
                residuals: None,
                trace,
                wall_seconds: wall,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Schedule extraction
// ---------------------------------------------------------------------------

/// Reads the full per-period operating point out of a solution.
pub fn extract_schedules(case: &Case, stack: &ModelStack, solution: &Solution) -> Schedules {
    let periods = case.grid.periods;
    let s_base = case.eps.s_base_mva;
    let series = |vars: &[VarId], scale: f64| -> Vec<f64> {
        vars.iter().map(|&v| solution.value(v) * scale).collect()
    };

    let devices = case
        .eps
        .devices
        .iter()
        .enumerate()
        .map(|(d, device)| DeviceSchedule {
            id: device.id.clone(),
            p_mw: series(&stack.power.device_p[d], s_base),
            q_mvar: stack.power.device_q[d]
                .as_ref()
                .map(|vars| series(vars, s_base)),
            heat_mw: stack.thermal.device_heat[d]
                .as_ref()
                .map(|vars| series(vars, 1.0)),
        })
        .collect();

    let nodes = case
        .dhs
        .nodes
        .iter()
        .enumerate()
        .map(|(n, node)| NodeSchedule {
            id: node.id,
            ts_c: series(&stack.thermal.node_ts[n], 1.0),
            tr_c: series(&stack.thermal.node_tr[n], 1.0),
            ps_pa: series(&stack.hydraulics.ps[n], 1.0),
            pr_pa: series(&stack.hydraulics.pr[n], 1.0),
            inflow_kg_s: stack.hydraulics.source_inflow[n]
                .as_ref()
                .map(|vars| series(vars, 1.0)),
            outflow_kg_s: stack.hydraulics.load_outflow[n]
                .as_ref()
                .map(|vars| series(vars, 1.0)),
        })
        .collect();

    let pipes = case
        .dhs
        .pipes
        .iter()
        .enumerate()
        .map(|(p, pipe)| PipeSchedule {
            from: pipe.from,
            to: pipe.to,
            flow_kg_s: series(&stack.hydraulics.pipe_flow[p], 1.0),
            supply_out_c: series(&stack.thermal.supply_out[p], 1.0),
            return_out_c: series(&stack.thermal.return_out[p], 1.0),
            dp_pa: match pipe.kind {
                PipeKind::Valve { .. } => stack.hydraulics.valve_dp[p]
                    .as_ref()
                    .map(|vars| series(vars, 1.0)),
                PipeKind::Pump(_) => stack.hydraulics.pump_dp[p]
                    .as_ref()
                    .map(|vars| series(vars, 1.0)),
                PipeKind::Friction => None,
            },
            pump_mw: stack.hydraulics.pump_power[p]
                .as_ref()
                .map(|vars| series(vars, 1.0)),
        })
        .collect();

    Schedules {
        periods,
        step_hours: case.grid.step_hours(),
        devices,
        nodes,
        pipes,
    }
}

/// Wraps raw values into a [`Solution`] for the evaluators.
pub fn point_solution(values: Vec<f64>) -> Solution {
    let objective = f64::NAN;
    Solution {
        status: SolveStatus::Feasible,
        values,
        objective,
        bound: f64::NEG_INFINITY,
        stats: SolveStats::default(),
    }
}



#[cfg(test)]
mod smoke {
    use super::*;

    #[test]
    #[ignore]
    fn constant_flow_backend_settings() {
        let case = crate::case::case33_30();
        let regime = constant_regime(&case, &FlowSetting::Total(175.0)).expect("regime");
        let constants = &case.constants;
        let mut total_drop = 0.0;
        for (p, pipe) in case.dhs.pipes.iter().enumerate() {
            let m = regime.pipes[p][0];
            let mu = pipe.friction_coefficient(constants);
            let drop = mu * m * m;
            total_drop += drop;
            if drop > 5e4 {
                eprintln!("pipe {}-{} kind {:?}: mu {:.4} m {:.1} drop {:.3e}", pipe.from, pipe.to, std::mem::discriminant(&pipe.kind), mu, m, drop);
            }
        }
        eprintln!("sum of friction drops: {:.3e}", total_drop);
        let node = &case.dhs.nodes[0];
        eprintln!("ps box: [{:.1e}, {:.1e}]", node.ps_min, node.ps_max);
        for (variant, cones_on, envelopes_on, margins_on) in [
            ("bare", false, false, false),
            ("envelopes", false, true, false),
            ("envelopes+margins", false, true, true),
            ("full", true, true, true),
        ] {
            let mut stack = build_model(&case).expect("builds");
            let periods = case.grid.periods;
            let mut pinned: HashMap<VarId, f64> = HashMap::new();
            for (p, series) in regime.pipes.iter().enumerate() {
                for t in 0..periods { pinned.insert(stack.hydraulics.pipe_flow[p][t], series[t]); }
            }
            for (n, series) in regime.sources.iter().enumerate() {
                if let (Some(series), Some(vars)) = (series, &stack.hydraulics.source_inflow[n]) {
                    for t in 0..periods { pinned.insert(vars[t], series[t]); }
                }
            }
            for (n, series) in regime.loads.iter().enumerate() {
                if let (Some(series), Some(vars)) = (series, &stack.hydraulics.load_outflow[n]) {
                    for t in 0..periods { pinned.insert(vars[t], series[t]); }
                }
            }
            for (&var, &value) in &pinned {
                stack.program.set_bounds(var, value, value).unwrap();
            }
            for mix in &stack.thermal.mix_totals {
                let total: f64 = mix.streams.iter().map(|s| pinned[s]).sum();
                stack.program.set_bounds(mix.total, total, total).unwrap();
            }
            if envelopes_on {
                for term in stack.registry.terms() {
                    crate::relax::mccormick_envelope(&mut stack.program, term).unwrap();
                }
            }
            if cones_on {
                for relation in stack.registry.quadratics() {
                    crate::relax::relax_quadratic_equality(&mut stack.program, relation).unwrap();
                }
                for region in stack.registry.pumps() {
                    crate::relax::pump_convex_region(&mut stack.program, region).unwrap();
                }
            }
            if margins_on {
                for relation in stack.registry.quadratics() {
                    let m = pinned[&relation.flow];
                    stack.program.add_ge(relation.drop.clone(), relation.coeff * m * m + RECOVERY_MARGIN).unwrap();
                }
            }
            let backend = ClarabelBackend::default();
            let start = std::time::Instant::now();
            match solve_continuous(&stack.program, &backend) {
                Ok(s) if !s.values.is_empty() => {
                    let report = verify_original(&case, &stack, &s);
                    eprintln!(
                        "{variant}: {:?} cost {:.2} worst residual {:.3e} ({} iters, {:.1}s)",
                        s.status,
                        stack.power.cost.eval(&s.values),
                        report.worst(),
                        s.stats.iterations,
                        start.elapsed().as_secs_f64()
                    );
                }
                Ok(s) => eprintln!("{variant}: {:?} no point ({:.1}s)", s.status, start.elapsed().as_secs_f64()),
                Err(e) => eprintln!("{variant}: error {e}"),
            }
        }
    }

    #[test]
    #[ignore]
    fn constant_flow_case33_30_settings() {
        let case = crate::case::case33_30();
        for setting in case.dhs.constant_flow_settings.clone() {
            if let Ok(regime) = constant_regime(&case, &FlowSetting::Total(setting)) {
                let flows: Vec<f64> = regime.pipes.iter().map(|s| s[0]).collect();
                let min = flows.iter().cloned().fold(f64::INFINITY, f64::min);
                eprintln!(
                    "flow {setting}: {} pipes, min {min:.3}, zeros {}",
                    flows.len(),
                    flows.iter().filter(|f| f.abs() < 1e-9).count()
                );
                eprintln!("  flows: {:?}", flows.iter().map(|f| (f * 100.0).round() / 100.0).collect::<Vec<_>>());
            }
            let start = std::time::Instant::now();
            match solve_constant_flow(&case, &FlowSetting::Total(setting)) {
                Ok(result) => eprintln!(
                    "flow {setting}: cost {:?} worst residual {:.3e} in {:.1}s",
                    result.recovered_objective,
                    result.residuals.as_ref().unwrap().worst(),
                    start.elapsed().as_secs_f64()
                ),
                Err(e) => eprintln!("flow {setting}: {e}"),
            }
        }
    }

    #[test]
    #[ignore]
    fn adaptive_case33_30_one_iteration() {
        let case = crate::case::case33_30();
        let settings = AdaptiveSettings {
            time_limit: Duration::from_secs(600),
            max_iterations: Some(2),
            ..AdaptiveSettings::default()
        };
        let start = std::time::Instant::now();
        let result = adaptive_solve(&case, &settings).expect("solves");
        eprintln!(
            "adaptive(2 iters): status {:?} bound {:.2} best {:?} in {:.1}s",
            result.status,
            result.relaxed_objective,
            result.recovered_objective,
            start.elapsed().as_secs_f64()
        );
        for log in &result.trace {
            eprintln!(
                "  iter {}: bound {:.2} incumbent {:.2} recovered {:?} gap {:.2}% refined {:?} ({} binaries) at {:.1}s",
                log.iteration,
                log.relaxed_bound,
                log.incumbent_objective,
                log.recovered_objective,
                log.max_gap_percent,
                log.refined_label,
                log.binaries,
                log.wall_seconds
            );
        }
    }

    #[test]
    #[ignore]
    fn convex_case33_30_timing() {
        let case = crate::case::case33_30();
        let start = std::time::Instant::now();
        let result = solve_dispatch_convex(&case).expect("solves");
        eprintln!(
            "case33_30 convex: status {:?} bound {:.2} recovered {:?} in {:.1}s",
            result.status,
            result.relaxed_objective,
            result.recovered_objective,
            start.elapsed().as_secs_f64()
        );
        if let DispatchStatus::RelaxedOnly(reason) = &result.status {
            eprintln!("  reason: {reason}");
        }
        if let Some(r) = &result.residuals {
            eprintln!("  worst residual {:.3e}", r.worst());
        }
    }
}
