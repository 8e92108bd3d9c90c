//! Hydraulics of the heating network: water distribution (continuity),
//! pressure propagation (friction, valves, pumps, heat-exchanger losses)
//! and pump electric power.
//!
//! What lands where:
//! - **Program rows (linear):** nodal continuity, valve-drop and pump-rise
//!   definitions, lossless return ties across valve/pump pipes, the
//!   supply = return tie at pure source nodes, the supply ≥ return ordering
//!   at junctions, and every variable box.
//! - **Registry (nonconvex):** major friction losses `Δp = μ·m²` on the
//!   supply and return sides of plain pipes, heat-exchanger minor losses
//!   `p^S − p^R = coef·(m^out)²` at load nodes, the pump power product
//!   `P^WP·η^WP·ρ_w = m·Δp^WP`, and the pump operating region
//!   `Δp^WP ≤ shutoff − curve·m²`.
//!
//! Modeling notes:
//! - Pipe kinds are exclusive. A pump or valve pipe carries no friction
//!   relation (a friction drop would contradict the imposed rise/drop), and
//!   its return side is a lossless short connector tying the two return
//!   pressures together.
//! - Minor losses model heat-exchanger internals, so they appear exactly at
//!   load nodes. A pure source node ties `p^S = p^R` — the plant connection
//!   is lossless and the circulation pump downstream provides the lift —
//!   which pins pump suction to the return level and keeps pump power
//!   honest. A junction gets the one-sided ordering `p^S ≥ p^R`: every
//!   physical tree operating point satisfies it, so it tightens the
//!   relaxation without cutting solutions. It is a strengthening cut, not
//!   physics, and belongs to no residual family.
//! - Absolute pressure is translation-invariant in this model, so the
//!   return pressure of the main source node is pinned to its lower bound
//!   in every period. This is a documented modeling choice; the physics
//!   does not single out a node.
//! - Pump speed is eliminated. With relative speed `w ∈ [0, 1]` and flow
//!   exponent 2, the characteristic curve sweeps exactly
//!   `0 ≤ Δp^WP ≤ c_Pa·γ¹ − (c_Pa·γ²/ρ_w²)·m²`, which is what the registry
//!   records (`shutoff` and `curve` are the two constants).
//!
//! Residual convention ([`hydraulic_residuals`]): two-sided equalities
//! report `|lhs − rhs| / max(1, |lhs|, |rhs|)`; relations a relaxation may
//! legitimately over-satisfy (friction and minor losses, the pump region)
//! report a signed value — positive means violated, negative means slack.

use std::collections::HashMap;

use conic::{ConicProgram, LinExpr, Solution, VarId};

use super::{relative_gap, BilinearRegistry, BuildError, ResidualReport, TermFamily};
use crate::case::{Case, DhsNode, Pipe, PipeKind};

/// Variable handles of the hydraulic block.
///
/// Outer index: element position in `case.dhs.pipes` / `case.dhs.nodes`;
/// inner index: period. Entries are `None` where the element lacks the
/// feature (a non-source node has no injection, a plain pipe no valve drop).
#[derive(Clone, Debug)]
pub struct HydraulicVarHandles {
    /// Mass flow through each pipe (kg/s); one variable serves the supply
    /// and the mirrored return network.
    pub pipe_flow: Vec<Vec<VarId>>,
    /// Injection through the source at a node (kg/s).
    pub source_inflow: Vec<Option<Vec<VarId>>>,
    /// Outflow through the heat exchanger at a node (kg/s).
    pub load_outflow: Vec<Option<Vec<VarId>>>,
    /// Nodal supply pressure (Pa).
    pub ps: Vec<Vec<VarId>>,
    /// Nodal return pressure (Pa).
    pub pr: Vec<Vec<VarId>>,
    /// Valve pressure drop on the supply side (Pa).
    pub valve_dp: Vec<Option<Vec<VarId>>>,
    /// Pump pressure rise on the supply side (Pa).
    pub pump_dp: Vec<Option<Vec<VarId>>>,
    /// Pump electric power draw (MW).
    pub pump_power: Vec<Option<Vec<VarId>>>,
}

/// Coefficient of the pump power product `P^WP = c · m · Δp^WP` with power
/// in MW: `c = 1 / (η^WP · ρ_w · 10⁶)`.
fn pump_power_coefficient(efficiency: f64, water_density: f64) -> f64 {
    1.0 / (efficiency * water_density * 1e6)
}

fn pipe_tag(pipe: &Pipe) -> String {
    format!("pipe {}-{}", pipe.from, pipe.to)
}

fn node_tag(node: &DhsNode) -> String {
    format!("node {}", node.id)
}

/// Builds the hydraulic variables and relations for every period.
///
/// Linear relations and boxes go into `program`; friction and minor-loss
/// quadratics, pump power products and pump operating regions go into
/// `registry`. Expects a validated case (invalid data surfaces as
/// [`BuildError::Data`] where it would corrupt the model).
pub fn build_hydraulic_relations(
    case: &Case,
    program: &mut ConicProgram,
    registry: &mut BilinearRegistry,
) -> Result<HydraulicVarHandles, BuildError> {
    let periods = case.grid.periods;
    let constants = &case.constants;
    let nodes = &case.dhs.nodes;
    let pipes = &case.dhs.pipes;

    let node_pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let endpoint = |id: usize, tag: &str| -> Result<usize, BuildError> {
        node_pos
            .get(&id)
            .copied()
            .ok_or_else(|| BuildError::Data(format!("{tag}: endpoint node {id} does not exist")))
    };

    // Up-front data checks: every friction coefficient must be usable and
    // every pump must couple to a real electric bus.
    for pipe in pipes {
        let tag = pipe_tag(pipe);
        match &pipe.kind {
            PipeKind::Friction => {
                let mu = pipe.friction_coefficient(constants);
                if !(mu.is_finite() && mu > 0.0) {
                    return Err(BuildError::Data(format!(
                        "{tag}: friction coefficient must be finite and positive, got {mu}"
                    )));
                }
            }
            PipeKind::Valve { .. } => {}
            PipeKind::Pump(spec) => {
                if case.bus_pos(spec.bus).is_none() {
                    return Err(BuildError::Data(format!(
                        "{tag}: pump references electric bus {} which is not in the network",
                        spec.bus
                    )));
                }
            }
        }
    }

    let anchor = case.main_source_node();

    let mut handles = HydraulicVarHandles {
        pipe_flow: vec![Vec::with_capacity(periods); pipes.len()],
        source_inflow: nodes
            .iter()
            .map(|n| n.is_source().then(|| Vec::with_capacity(periods)))
            .collect(),
        load_outflow: nodes
            .iter()
            .map(|n| n.is_load().then(|| Vec::with_capacity(periods)))
            .collect(),
        ps: vec![Vec::with_capacity(periods); nodes.len()],
        pr: vec![Vec::with_capacity(periods); nodes.len()],
        valve_dp: pipes
            .iter()
            .map(|p| matches!(p.kind, PipeKind::Valve { .. }).then(|| Vec::with_capacity(periods)))
            .collect(),
        pump_dp: pipes
            .iter()
            .map(|p| matches!(p.kind, PipeKind::Pump(_)).then(|| Vec::with_capacity(periods)))
            .collect(),
        pump_power: pipes
            .iter()
            .map(|p| matches!(p.kind, PipeKind::Pump(_)).then(|| Vec::with_capacity(periods)))
            .collect(),
    };

    for t in 0..periods {
        // --- variables ------------------------------------------------------
        for (p, pipe) in pipes.iter().enumerate() {
            let m = program.add_var(
                &format!("m_{}_{}_t{t}", pipe.from, pipe.to),
                pipe.m_min,
                pipe.m_max,
            )?;
            handles.pipe_flow[p].push(m);
            match &pipe.kind {
                PipeKind::Friction => {}
                PipeKind::Valve { dp_max } => {
                    let dpv = program.add_var(
                        &format!("dpv_{}_{}_t{t}", pipe.from, pipe.to),
                        0.0,
                        *dp_max,
                    )?;
                    handles.valve_dp[p].as_mut().expect("valve pipe").push(dpv);
                }
                PipeKind::Pump(spec) => {
                    let shutoff = constants.head_to_pressure() * spec.gamma1;
                    let dpw = program.add_var(
                        &format!("dpw_{}_{}_t{t}", pipe.from, pipe.to),
                        0.0,
                        shutoff,
                    )?;
                    let pwp = program.add_var(
                        &format!("pwp_{}_{}_t{t}", pipe.from, pipe.to),
                        0.0,
                        spec.p_max,
                    )?;
                    handles.pump_dp[p].as_mut().expect("pump pipe").push(dpw);
                    handles.pump_power[p].as_mut().expect("pump pipe").push(pwp);
                }
            }
        }
        for (n, node) in nodes.iter().enumerate() {
            let ps = program.add_var(&format!("ps_{}_t{t}", node.id), node.ps_min, node.ps_max)?;
            // The main source node's return pressure anchors the otherwise
            // translation-invariant pressure system.
            let pr_max = if Some(node.id) == anchor { node.pr_min } else { node.pr_max };
            let pr = program.add_var(&format!("pr_{}_t{t}", node.id), node.pr_min, pr_max)?;
            handles.ps[n].push(ps);
            handles.pr[n].push(pr);
            if let Some(source) = &node.source {
                let inflow = program.add_var(
                    &format!("min_{}_t{t}", node.id),
                    source.m_in_min,
                    source.m_in_max,
                )?;
                handles.source_inflow[n].as_mut().expect("source node").push(inflow);
            }
            if let Some(load) = &node.load {
                let outflow = program.add_var(
                    &format!("mout_{}_t{t}", node.id),
                    load.m_out_min,
                    load.m_out_max,
                )?;
                handles.load_outflow[n].as_mut().expect("load node").push(outflow);
            }
        }

        // --- nodal relations --------------------------------------------------
        for (n, node) in nodes.iter().enumerate() {
            // Continuity: injection − delivery = Σ outgoing − Σ incoming.
            let mut balance = LinExpr::zero();
            if let Some(inflow) = &handles.source_inflow[n] {
                balance.add_term(inflow[t], 1.0);
            }
            if let Some(outflow) = &handles.load_outflow[n] {
                balance.add_term(outflow[t], -1.0);
            }
            for (p, pipe) in pipes.iter().enumerate() {
                if pipe.from == node.id {
                    balance.add_term(handles.pipe_flow[p][t], -1.0);
                }
                if pipe.to == node.id {
                    balance.add_term(handles.pipe_flow[p][t], 1.0);
                }
            }
            program.add_eq(balance, 0.0)?;

            let ps = handles.ps[n][t];
            let pr = handles.pr[n][t];
            if let Some(load) = &node.load {
                // Heat-exchanger minor loss p^S − p^R = coef·(m^out)².
                let outflow = handles.load_outflow[n].as_ref().expect("load node")[t];
                registry.register_quadratic(
                    LinExpr::var(ps) - LinExpr::var(pr),
                    outflow,
                    load.minor_coefficient(constants),
                    node_tag(node),
                    t,
                );
            } else if node.is_source() {
                // Lossless plant connection: supply meets return.
                program.add_eq(LinExpr::var(ps) - LinExpr::var(pr), 0.0)?;
            } else {
                // Junction ordering cut (supply runs above return).
                program.add_ge(LinExpr::var(ps) - LinExpr::var(pr), 0.0)?;
            }
        }

        // --- pipe relations ---------------------------------------------------
        for (p, pipe) in pipes.iter().enumerate() {
            let tag = pipe_tag(pipe);
            let from = endpoint(pipe.from, &tag)?;
            let to = endpoint(pipe.to, &tag)?;
            let m = handles.pipe_flow[p][t];
            let ps_from = handles.ps[from][t];
            let ps_to = handles.ps[to][t];
            let pr_from = handles.pr[from][t];
            let pr_to = handles.pr[to][t];
            match &pipe.kind {
                PipeKind::Friction => {
                    let mu = pipe.friction_coefficient(constants);
                    // Supply water flows from→to, return water to→from;
                    // pressure falls along each flow direction.
                    registry.register_quadratic(
                        LinExpr::var(ps_from) - LinExpr::var(ps_to),
                        m,
                        mu,
                        format!("{tag} supply"),
                        t,
                    );
                    registry.register_quadratic(
                        LinExpr::var(pr_to) - LinExpr::var(pr_from),
                        m,
                        mu,
                        format!("{tag} return"),
                        t,
                    );
                }
                PipeKind::Valve { .. } => {
                    let dpv = handles.valve_dp[p].as_ref().expect("valve pipe")[t];
                    program.add_eq(
                        LinExpr::var(dpv) - LinExpr::var(ps_from) + LinExpr::var(ps_to),
                        0.0,
                    )?;
                    program.add_eq(LinExpr::var(pr_from) - LinExpr::var(pr_to), 0.0)?;
                }
                PipeKind::Pump(spec) => {
                    let dpw = handles.pump_dp[p].as_ref().expect("pump pipe")[t];
                    let pwp = handles.pump_power[p].as_ref().expect("pump pipe")[t];
                    program.add_eq(
                        LinExpr::var(dpw) - LinExpr::var(ps_to) + LinExpr::var(ps_from),
                        0.0,
                    )?;
                    program.add_eq(LinExpr::var(pr_from) - LinExpr::var(pr_to), 0.0)?;
                    registry.register(
                        pwp,
                        m,
                        dpw,
                        pump_power_coefficient(spec.efficiency, constants.water_density),
                        TermFamily::PumpPower,
                        tag.clone(),
                        t,
                    );
                    let shutoff = constants.head_to_pressure() * spec.gamma1;
                    let curve = constants.head_to_pressure() * spec.gamma2
                        / constants.water_density.powi(2);
                    registry.register_pump(dpw, m, shutoff, curve, tag.clone(), t);
                }
            }
        }
    }

    Ok(handles)
}

/// Evaluates the original hydraulic relations at a primal point.
///
/// Works straight from the case data and the handles — independently of
/// the program rows and of any relaxation — so it also judges externally
/// constructed or recovered points. See the module docs for the sign
/// convention per family.
pub fn hydraulic_residuals(
    case: &Case,
    handles: &HydraulicVarHandles,
    solution: &Solution,
) -> ResidualReport {
    let mut report = ResidualReport::new();
    let constants = &case.constants;
    let nodes = &case.dhs.nodes;
    let pipes = &case.dhs.pipes;
    let node_pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

    for t in 0..case.grid.periods {
        for (n, node) in nodes.iter().enumerate() {
            let tag = node_tag(node);
            let mut lhs = 0.0;
            if let Some(inflow) = &handles.source_inflow[n] {
                lhs += solution.value(inflow[t]);
            }
            if let Some(outflow) = &handles.load_outflow[n] {
                lhs -= solution.value(outflow[t]);
            }
            let mut rhs = 0.0;
            for (p, pipe) in pipes.iter().enumerate() {
                if pipe.from == node.id {
                    rhs += solution.value(handles.pipe_flow[p][t]);
                }
                if pipe.to == node.id {
                    rhs -= solution.value(handles.pipe_flow[p][t]);
                }
            }
            report.push("continuity", tag.clone(), t, relative_gap(lhs, rhs));

            let ps = solution.value(handles.ps[n][t]);
            let pr = solution.value(handles.pr[n][t]);
            if let Some(load) = &node.load {
                let outflow = solution.value(handles.load_outflow[n].as_ref().expect("load")[t]);
                let required = load.minor_coefficient(constants) * outflow * outflow;
                let actual = ps - pr;
                report.push(
                    "minor-loss",
                    tag,
                    t,
                    (required - actual) / 1.0f64.max(actual.abs()),
                );
            } else if node.is_source() {
                report.push("source-tie", tag, t, relative_gap(ps, pr));
            }
        }

        for (p, pipe) in pipes.iter().enumerate() {
            let tag = pipe_tag(pipe);
            let (Some(&from), Some(&to)) = (node_pos.get(&pipe.from), node_pos.get(&pipe.to))
            else {
                continue;
            };
            let m = solution.value(handles.pipe_flow[p][t]);
            let ps_from = solution.value(handles.ps[from][t]);
            let ps_to = solution.value(handles.ps[to][t]);
            let pr_from = solution.value(handles.pr[from][t]);
            let pr_to = solution.value(handles.pr[to][t]);
            match &pipe.kind {
                PipeKind::Friction => {
                    let required = pipe.friction_coefficient(constants) * m * m;
                    let supply = ps_from - ps_to;
                    let ret = pr_to - pr_from;
                    report.push(
                        "major-loss-supply",
                        tag.clone(),
                        t,
                        (required - supply) / 1.0f64.max(supply.abs()),
                    );
                    report.push(
                        "major-loss-return",
                        tag,
                        t,
                        (required - ret) / 1.0f64.max(ret.abs()),
                    );
                }
                PipeKind::Valve { .. } => {
                    let dpv = solution.value(handles.valve_dp[p].as_ref().expect("valve")[t]);
                    report.push("valve-drop", tag.clone(), t, relative_gap(dpv, ps_from - ps_to));
                    report.push("return-tie", tag, t, relative_gap(pr_from, pr_to));
                }
                PipeKind::Pump(spec) => {
                    let dpw = solution.value(handles.pump_dp[p].as_ref().expect("pump")[t]);
                    let pwp = solution.value(handles.pump_power[p].as_ref().expect("pump")[t]);
                    report.push("pump-rise", tag.clone(), t, relative_gap(dpw, ps_to - ps_from));
                    report.push("return-tie", tag.clone(), t, relative_gap(pr_from, pr_to));
                    let c = pump_power_coefficient(spec.efficiency, constants.water_density);
                    report.push("pump-power", tag.clone(), t, relative_gap(pwp, c * m * dpw));
                    let shutoff = constants.head_to_pressure() * spec.gamma1;
                    let curve = constants.head_to_pressure() * spec.gamma2
                        / constants.water_density.powi(2);
                    report.push(
                        "pump-region",
                        tag,
                        t,
                        (dpw + curve * m * m - shutoff) / 1.0f64.max(shutoff),
                    );
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{case33_30, load_case, validate_case};
    use conic::{SolveStats, SolveStatus};

    /// Source 1 → junction 2 → load 3 chain with one pump, one friction
    /// pipe, and enough defaults to exercise every relation kind.
    const CHAIN: &str = r#"
schema = "chpd-case-v1"
name = "chain"

[constants]
water_density = 1000.0
specific_heat = 4182.0
gravity = 9.81

[grid]
step_seconds = 3600.0
periods = 2

[eps]
s_base_mva = 1.0
root_bus = 1
branch = []

[[eps.bus]]
id = 1

[[eps.device]]
id = "g"
kind = "chp"
bus = 1
p_max = 5.0
power_to_heat = 1.2
node = 1

[dhs]

[[dhs.node]]
id = 1
kind = "source"

[[dhs.node]]
id = 2
kind = "junction"

[[dhs.node]]
id = 3
kind = "load"
demand_series = [0.2, 0.3]

[[dhs.pipe]]
from = 1
to = 2
length = 100.0
diameter = 0.2
kind = "pump"
pump = { gamma1 = 50.0, gamma2 = 30.0, gamma3 = 2.0, efficiency = 0.8, p_max = 0.1, bus = 1 }

[[dhs.pipe]]
from = 2
to = 3
length = 400.0
diameter = 0.2
"#;

    fn chain_case() -> Case {
        load_case(CHAIN).expect("chain fixture parses")
    }

    fn build(case: &Case) -> (ConicProgram, BilinearRegistry, HydraulicVarHandles) {
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let handles = build_hydraulic_relations(case, &mut program, &mut registry)
            .expect("hydraulic build succeeds");
        (program, registry, handles)
    }

    /// All-zero primal point for a program, as a mutable scaffold.
    fn zero_point(program: &ConicProgram) -> Vec<f64> {
        vec![0.0; program.num_vars()]
    }

    fn set(program: &ConicProgram, values: &mut [f64], id: VarId, x: f64) {
        let pos = program
            .var_ids()
            .position(|v| v == id)
            .expect("variable belongs to program");
        values[pos] = x;
    }

    fn solution(values: Vec<f64>) -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            values,
            objective: f64::NAN,
            bound: f64::NAN,
            stats: SolveStats::default(),
        }
    }

    #[test]
    fn chain_fixture_is_a_valid_case() {
        let report = validate_case(&chain_case());
        assert!(!report.has_errors(), "{report}");
    }

    #[test]
    fn pump_power_coefficient_matches_direct_substitution() {
        // m = 100 kg/s lifted 3·10⁵ Pa at η = 0.8:
        // P = 100·3e5/(0.8·1000) W = 37.5 kW = 0.0375 MW.
        let case = chain_case();
        let (_, registry, _) = build(&case);
        let term = registry
            .terms()
            .iter()
            .find(|term| term.family == TermFamily::PumpPower)
            .expect("pump term registered");
        assert!((term.c * 100.0 * 3e5 - 0.0375).abs() < 1e-12);
    }

    #[test]
    fn registry_and_row_counts_follow_the_network_shape() {
        let case = chain_case();
        let (program, registry, _) = build(&case);
        // Per period: 1 friction pipe → 2 major quadratics, 1 load → 1 minor.
        assert_eq!(registry.quadratics().len(), 3 * 2);
        // Per period: 1 pump → 1 power product + 1 operating region.
        assert_eq!(registry.len(), 2);
        assert_eq!(registry.family_count(TermFamily::PumpPower), 2);
        assert_eq!(registry.pumps().len(), 2);
        // Per period: 3 continuity + pump rise + return tie + source tie = 6
        // equalities and 1 junction ordering.
        assert_eq!(program.num_linear(), 7 * 2);
        // Builders never add cones or binaries; relaxation does.
        assert_eq!(program.num_socs(), 0);
        assert_eq!(program.num_binaries(), 0);
    }

    #[test]
    fn large_case_counts_match_the_published_network() {
        let case = case33_30();
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        build_hydraulic_relations(&case, &mut program, &mut registry).expect("build");
        // 26 friction pipes × 2 sides + 17 exchangers = 69 quadratics/period.
        assert_eq!(registry.quadratics().len(), 69 * 24);
        // 2 pumps/period: power products and operating regions.
        assert_eq!(registry.len(), 2 * 24);
        assert_eq!(registry.pumps().len(), 2 * 24);
        // 29 flows + 60 pressures + 2 injections + 17 outflows + 1 valve
        // drop + 2×(rise, power) = 113 variables/period.
        assert_eq!(program.num_vars(), 113 * 24);
        // 30 continuity + 2 valve rows + 4 pump rows + 2 source ties + 11
        // junction orderings = 49 rows/period.
        assert_eq!(program.num_linear(), 49 * 24);
    }

    #[test]
    fn anchor_node_return_pressure_is_pinned() {
        let case = case33_30();
        let (program, _, handles) = build(&case);
        let anchor = case.node_pos(1).expect("node 1 exists");
        for t in 0..case.grid.periods {
            let (lb, ub) = program.bounds(handles.pr[anchor][t]);
            assert_eq!(lb, ub, "anchored return pressure is a point, period {t}");
        }
        // Non-anchor nodes keep their full boxes.
        let other = case.node_pos(29).expect("node 29 exists");
        let (lb, ub) = program.bounds(handles.pr[other][0]);
        assert!(ub > lb);
    }

    #[test]
    fn pump_on_a_missing_bus_is_rejected() {
        let text = CHAIN.replace("efficiency = 0.8, p_max = 0.1, bus = 1", "efficiency = 0.8, p_max = 0.1, bus = 9");
        let case = load_case(&text).expect("parses");
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let err = build_hydraulic_relations(&case, &mut program, &mut registry).unwrap_err();
        assert!(matches!(err, BuildError::Data(_)), "{err}");
        assert!(err.to_string().contains("bus 9"), "{err}");
    }

    #[test]
    fn singular_friction_factor_is_rejected() {
        // ε/(3.7·D) = 1 exactly and 5.74/Re^0.9 underflowing against 1.0
        // make the correlation's log argument exactly 1 → f = ∞.
        let text = CHAIN.replace(
            "length = 400.0\ndiameter = 0.2",
            "length = 400.0\ndiameter = 1.0\nroughness = 3.7\nreynolds = 1e200",
        );
        let case = load_case(&text).expect("parses");
        let mut program = ConicProgram::new();
        let mut registry = BilinearRegistry::new();
        let err = build_hydraulic_relations(&case, &mut program, &mut registry).unwrap_err();
        assert!(err.to_string().contains("friction"), "{err}");
    }

    /// Hand-solved chain operating point: flows fixed, pressures propagated
    /// backwards from the anchored return level.
    fn chain_point(case: &Case, program: &ConicProgram, handles: &HydraulicVarHandles) -> Vec<f64> {
        let k = &case.constants;
        let flow = 10.0;
        let mu = case.dhs.pipes[1].friction_coefficient(k);
        let coef = case.dhs.nodes[2].load.as_ref().expect("load node").minor_coefficient(k);
        let pump = match &case.dhs.pipes[0].kind {
            PipeKind::Pump(spec) => spec,
            other => panic!("expected pump pipe, got {other:?}"),
        };

        let pr1 = case.dhs.nodes[0].pr_min; // anchored
        let ps1 = pr1; // source tie
        let pr2 = pr1; // lossless pump return
        let pr3 = pr2 + mu * flow * flow; // return major loss
        let ps3 = pr3 + coef * flow * flow; // exchanger minor loss
        let ps2 = ps3 + mu * flow * flow; // supply major loss
        let dpw = ps2 - ps1;
        let pwp = pump_power_coefficient(pump.efficiency, k.water_density) * flow * dpw;
        assert!(dpw <= k.head_to_pressure() * pump.gamma1 - 1.0, "inside pump region");

        let mut values = zero_point(program);
        for t in 0..case.grid.periods {
            set(program, &mut values, handles.pipe_flow[0][t], flow);
            set(program, &mut values, handles.pipe_flow[1][t], flow);
            set(program, &mut values, handles.source_inflow[0].as_ref().unwrap()[t], flow);
            set(program, &mut values, handles.load_outflow[2].as_ref().unwrap()[t], flow);
            for (n, p) in [ps1, ps2, ps3].iter().enumerate() {
                set(program, &mut values, handles.ps[n][t], *p);
            }
            for (n, p) in [pr1, pr2, pr3].iter().enumerate() {
                set(program, &mut values, handles.pr[n][t], *p);
            }
            set(program, &mut values, handles.pump_dp[0].as_ref().unwrap()[t], dpw);
            set(program, &mut values, handles.pump_power[0].as_ref().unwrap()[t], pwp);
        }
        values
    }

    #[test]
    fn hand_solved_chain_has_negligible_residuals() {
        let case = chain_case();
        let (program, _, handles) = build(&case);
        let values = chain_point(&case, &program, &handles);
        let report = hydraulic_residuals(&case, &handles, &solution(values.clone()));
        let worst = report.worst_entry().expect("entries exist");
        assert!(
            report.worst() <= 1e-8,
            "worst {} at {} {} period {}",
            worst.value,
            worst.family,
            worst.label,
            worst.period
        );
        // The point also satisfies every program row and box.
        assert!(program.max_violation(&values) <= 1e-8);
    }

    #[test]
    fn continuity_flags_an_unbalanced_junction() {
        let case = chain_case();
        let (program, _, handles) = build(&case);
        let mut values = chain_point(&case, &program, &handles);
        // Pipe 2→3 now carries less than pipe 1→2 delivers into node 2.
        set(&program, &mut values, handles.pipe_flow[1][0], 6.0);
        let report = hydraulic_residuals(&case, &handles, &solution(values));
        assert!(report.family_worst("continuity") > 0.5);
    }

    #[test]
    fn zero_pressures_report_the_friction_requirement_itself() {
        let case = chain_case();
        let (program, _, handles) = build(&case);
        let mu = case.dhs.pipes[1].friction_coefficient(&case.constants);
        let mut values = zero_point(&program);
        for t in 0..case.grid.periods {
            set(&program, &mut values, handles.pipe_flow[1][t], 10.0);
        }
        let report = hydraulic_residuals(&case, &handles, &solution(values));
        // Drop = 0 under nonzero flow: residual is the unmet requirement
        // μ·m² (normalizer max(1, |0|) = 1).
        let expect = mu * 100.0;
        assert!((report.family_worst("major-loss-supply") - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn oversatisfied_pressure_drop_counts_as_slack_not_violation() {
        let case = chain_case();
        let (program, _, handles) = build(&case);
        let mut values = chain_point(&case, &program, &handles);
        // Raise the upstream supply head: both supply drops exceed μ·m².
        for t in 0..case.grid.periods {
            let ps2 = values[program.var_ids().position(|v| v == handles.ps[1][t]).unwrap()];
            set(&program, &mut values, handles.ps[1][t], ps2 + 1000.0);
        }
        let report = hydraulic_residuals(&case, &handles, &solution(values));
        assert!(report.family_worst("major-loss-supply") < 0.0, "slack is negative");
        // The pump-rise definition is two-sided and now disagrees.
        assert!(report.family_worst("pump-rise") > 0.0);
    }

    #[test]
    fn stationary_pump_forces_zero_power_under_exact_evaluation() {
        let case = chain_case();
        let (program, registry, handles) = build(&case);
        let term = registry
            .terms()
            .iter()
            .find(|term| term.family == TermFamily::PumpPower)
            .expect("pump term");
        // z = c·x·y with x = m = 0 admits only z = 0: a zero point is
        // exact, a nonzero power draw at standstill is flagged.
        let mut values = zero_point(&program);
        set(&program, &mut values, handles.pump_dp[0].as_ref().unwrap()[term.period], 2.5e5);
        assert_eq!(term.residual(&solution(values.clone())), 0.0);
        set(&program, &mut values, handles.pump_power[0].as_ref().unwrap()[term.period], 0.01);
        assert!(term.residual(&solution(values)) > 0.009);
    }
}
