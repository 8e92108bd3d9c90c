//! Temperature side of the heating network: heat production couplings,
//! exchanger heat transfer, full nodal mixing, and the discretized pipe
//! temperature dynamics on both the supply and the return networks.
//!
//! Like the hydraulic block, the builder adds only linear rows and boxes to
//! the program; every product of a flow and a temperature goes to the
//! [`BilinearRegistry`](super::BilinearRegistry) for the relaxation layer:
//!
//! - exchanger transfer at sources (`Σ H = c_w·m_in·(T_in − T_R)`) and
//!   loads (`H_D = c_w·m_out·(T_S − T_out)`), with the temperature spread
//!   held in an auxiliary difference variable so each relation is one
//!   registered product;
//! - nodal mixing in multiplied-through form,
//!   `T_mix·Σ m_i = Σ T_i·m_i`, avoiding division by a possibly-zero
//!   total inflow: one product for the left side (against an auxiliary
//!   total-inflow variable) and one per inflow stream. A node with a
//!   single inflow needs no products at all: the flow cancels and mixing
//!   collapses to the linear identity `T_mix = T_1`, which is written as a
//!   hard row (it also pins the node temperature when the stream is idle —
//!   a harmless convention, since an idle stream delivers no heat);
//! - pipe dynamics by the one-step upwind balance per pipe, period and
//!   network, written on the pipe's average temperature `T̄`:
//!   `(W/Δt)·(T̄_t − T̄_{t−1}) + m·(T_out − T_in) + (λL/c_w)·(T̄_t − T_gd) = 0`
//!   with `W` the water mass in the pipe and `T̄ = (T_in + T_out)/2` as a
//!   row; the advection product `m·(T_out − T_in)` is the registered term.
//!
//! Water enters a pipe `(k,l)` at `k`'s mixed supply temperature and comes
//! back into `k` on the return side after entering the return pipe at `l`;
//! both inlet identities are hard rows. Producers draw from the return
//! network at their node and inject into the supply mix at their own
//! injection temperature; users draw from the supply and feed the return
//! mix at their exchanger outlet temperature.
//!
//! Residual conventions follow the hydraulic block: all families here are
//! two-sided equalities in their original (bilinear) form and report
//! `|a − b| / max(1, |a|, |b|)`.

use conic::{ConicProgram, LinExpr, Solution, VarId};

use super::{
    relative_gap, BilinearRegistry, BuildError, HydraulicVarHandles, PowerVarHandles,
    ResidualReport, TermFamily,
};
use crate::case::{Case, Device, DeviceKind};

/// Variable handles of the thermal block.
///
/// Node- and pipe-indexed vectors follow `case.dhs` positions; the inner
/// index is the period. Option entries are present exactly where the
/// element has the corresponding side (or, for devices, produces heat).
#[derive(Clone, Debug)]
pub struct ThermalVarHandles {
    /// Mixed nodal temperature, supply network (°C).
    pub node_ts: Vec<Vec<VarId>>,
    /// Mixed nodal temperature, return network (°C).
    pub node_tr: Vec<Vec<VarId>>,
    /// Injection temperature into the supply network at source nodes (°C).
    pub source_t_in: Vec<Option<Vec<VarId>>>,
    /// Total heat injected at source nodes (MW); tied to the device sum.
    pub source_heat: Vec<Option<Vec<VarId>>>,
    /// Exchanger outlet temperature into the return network at loads (°C).
    pub load_t_out: Vec<Option<Vec<VarId>>>,
    /// Heat delivered at load nodes (MW); pinned to the demand series.
    pub load_heat: Vec<Option<Vec<VarId>>>,
    /// Heat output per device (MW); `None` for purely electric devices.
    pub device_heat: Vec<Option<Vec<VarId>>>,
    /// Pipe inlet / outlet / average temperature, supply network (°C).
    pub supply_in: Vec<Vec<VarId>>,
    pub supply_out: Vec<Vec<VarId>>,
    pub supply_avg: Vec<Vec<VarId>>,
    /// Pipe inlet / outlet / average temperature, return network (°C).
    /// The return inlet of pipe `(k,l)` sits at node `l`; its outlet at `k`.
    pub return_in: Vec<Vec<VarId>>,
    pub return_out: Vec<Vec<VarId>>,
    pub return_avg: Vec<Vec<VarId>>,
    /// Every multi-stream mixing aggregate. Callers that pin a flow regime
    /// pin these too, so the mixing products lose their last free factor.
    pub mix_totals: Vec<MixTotal>,
}

/// One multi-stream mixing junction: the aggregate-flow variable and the
/// stream flows it sums.
#[derive(Clone, Debug)]
pub struct MixTotal {
    /// Aggregate inflow (kg/s); an equality row ties it to the stream sum.
    pub total: VarId,
    /// The constituent stream flow variables.
    pub streams: Vec<VarId>,
}

/// Heat-output factor of a device: MW of heat per MW of electric power
/// (produced for cogeneration, consumed for heat pumps).
fn heat_factor(device: &Device) -> Option<f64> {
    match device.kind {
        DeviceKind::Chp { power_to_heat, .. } => Some(power_to_heat),
        DeviceKind::HeatPump { cop, .. } => Some(cop),
        _ => None,
    }
}

fn heat_node(device: &Device) -> Option<usize> {
    match device.kind {
        DeviceKind::Chp { node, .. } | DeviceKind::HeatPump { node, .. } => Some(node),
        _ => None,
    }
}

/// Product box `c·x·y` over two boxes (`c > 0`).
fn corner_box(c: f64, (xl, xu): (f64, f64), (yl, yu): (f64, f64)) -> (f64, f64) {
    let corners = [xl * yl, xl * yu, xu * yl, xu * yu];
    let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (c * lo, c * hi)
}

/// One inflow stream of a nodal mix: water arriving at `temp` with `flow`.
struct Inflow {
    temp: VarId,
    temp_box: (f64, f64),
    flow: VarId,
    flow_box: (f64, f64),
    tag: String,
}

/// Builds the thermal relations of the heating network.
///
/// `hydraulics` supplies the shared flow variables and `power` the device
/// active powers entering the production couplings; pass the handles built
/// on the same program.
pub fn build_thermal_relations(
    case: &Case,
    program: &mut ConicProgram,
    registry: &mut BilinearRegistry,
    hydraulics: &HydraulicVarHandles,
    power: &PowerVarHandles,
) -> Result<ThermalVarHandles, BuildError> {
    let periods = case.grid.periods;
    let dt = case.grid.step_seconds;
    let s_base = case.eps.s_base_mva;
    let c_mw = case.constants.specific_heat_mw();
    let nodes = &case.dhs.nodes;
    let pipes = &case.dhs.pipes;

    if case.dhs.ground_temp.len() != periods {
        return Err(BuildError::Data(format!(
            "ground temperature series has {} entries, grid has {periods} periods",
            case.dhs.ground_temp.len()
        )));
    }
    for pipe in pipes {
        if !pipe.t_init_supply.is_finite() || !pipe.t_init_return.is_finite() {
            return Err(BuildError::Data(format!(
                "pipe {}-{}: initial temperatures must be finite",
                pipe.from, pipe.to
            )));
        }
    }
    for (n, node) in nodes.iter().enumerate() {
        if node.is_source() && hydraulics.source_inflow[n].is_none() {
            return Err(BuildError::Data(format!(
                "node {}: source inflow handle missing",
                node.id
            )));
        }
        if node.is_load() && hydraulics.load_outflow[n].is_none() {
            return Err(BuildError::Data(format!(
                "node {}: load outflow handle missing",
                node.id
            )));
        }
    }

    // Devices producing heat, grouped by the node position they serve.
    let mut producers_at: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (d, device) in case.eps.devices.iter().enumerate() {
        let Some(node_id) = heat_node(device) else {
            continue;
        };
        let n = case
            .node_pos(node_id)
            .ok_or_else(|| BuildError::Data(format!("device {}: node {node_id} does not exist", device.id)))?;
        if !nodes[n].is_source() {
            return Err(BuildError::Data(format!(
                "device {}: node {node_id} has no source side",
                device.id
            )));
        }
        producers_at[n].push(d);
    }

    let mut handles = ThermalVarHandles {
        node_ts: vec![Vec::with_capacity(periods); nodes.len()],
        node_tr: vec![Vec::with_capacity(periods); nodes.len()],
        source_t_in: nodes
            .iter()
            .map(|n| n.is_source().then(|| Vec::with_capacity(periods)))
            .collect(),
        source_heat: nodes
            .iter()
            .map(|n| n.is_source().then(|| Vec::with_capacity(periods)))
            .collect(),
        load_t_out: nodes
            .iter()
            .map(|n| n.is_load().then(|| Vec::with_capacity(periods)))
            .collect(),
        load_heat: nodes
            .iter()
            .map(|n| n.is_load().then(|| Vec::with_capacity(periods)))
            .collect(),
        device_heat: case
            .eps
            .devices
            .iter()
            .map(|d| heat_factor(d).map(|_| Vec::with_capacity(periods)))
            .collect(),
        supply_in: vec![Vec::with_capacity(periods); pipes.len()],
        supply_out: vec![Vec::with_capacity(periods); pipes.len()],
        supply_avg: vec![Vec::with_capacity(periods); pipes.len()],
        return_in: vec![Vec::with_capacity(periods); pipes.len()],
        return_out: vec![Vec::with_capacity(periods); pipes.len()],
        return_avg: vec![Vec::with_capacity(periods); pipes.len()],
        mix_totals: Vec::new(),
    };

    for t in 0..periods {
        // --- device heat outputs, tied to electric power ---------------------
        for (d, device) in case.eps.devices.iter().enumerate() {
            let Some(eta) = heat_factor(device) else {
                continue;
            };
            let h = program.add_var(
                &format!("hdev_{}_t{t}", device.id),
                eta * device.p_min,
                eta * device.p_max,
            )?;
            handles.device_heat[d].as_mut().expect("heat device").push(h);
            // H = η·P with P in per-unit: H − η·s_base·p = 0.
            let row = LinExpr::var(h) - LinExpr::term(power.device_p[d][t], eta * s_base);
            program.add_eq(row, 0.0)?;
        }

        // --- nodal temperatures and exchanger transfers -----------------------
        for (n, node) in nodes.iter().enumerate() {
            let ts = program.add_var(&format!("ts_{}_t{t}", node.id), node.ts_min, node.ts_max)?;
            let tr = program.add_var(&format!("tr_{}_t{t}", node.id), node.tr_min, node.tr_max)?;
            handles.node_ts[n].push(ts);
            handles.node_tr[n].push(tr);

            if let Some(source) = &node.source {
                let tag = format!("node {} source", node.id);
                let t_in = program.add_var(
                    &format!("tsin_{}_t{t}", node.id),
                    source.t_in_min,
                    source.t_in_max,
                )?;
                // Temperature spread picked up by the injected flow.
                let spread_box = (source.t_in_min - node.tr_max, source.t_in_max - node.tr_min);
                let spread = program.add_var(
                    &format!("dts_{}_t{t}", node.id),
                    spread_box.0,
                    spread_box.1,
                )?;
                program.add_eq(
                    LinExpr::var(spread) - LinExpr::var(t_in) + LinExpr::var(tr),
                    0.0,
                )?;
                // Total injected heat: bounded by both the transfer corners
                // and the production range of the devices at this node.
                let (corner_lo, corner_hi) =
                    corner_box(c_mw, (source.m_in_min, source.m_in_max), spread_box);
                let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
                for &d in &producers_at[n] {
                    let device = &case.eps.devices[d];
                    let eta = heat_factor(device).expect("producer");
                    sum_lo += eta * device.p_min;
                    sum_hi += eta * device.p_max;
                }
                let (h_lo, h_hi) = (corner_lo.max(sum_lo), corner_hi.min(sum_hi));
                if h_lo > h_hi {
                    return Err(BuildError::Data(format!(
                        "{tag}: production range [{sum_lo}, {sum_hi}] MW does not overlap \
                         the transfer range [{corner_lo}, {corner_hi}] MW"
                    )));
                }
                let heat = program.add_var(&format!("hsrc_{}_t{t}", node.id), h_lo, h_hi)?;
                let mut sum = LinExpr::term(heat, -1.0);
                for &d in &producers_at[n] {
                    sum.add_term(handles.device_heat[d].as_ref().expect("producer")[t], 1.0);
                }
                program.add_eq(sum, 0.0)?;
                let m_in = hydraulics.source_inflow[n].as_ref().expect("checked")[t];
                registry.register(heat, m_in, spread, c_mw, TermFamily::HeatTransfer, &tag, t);
                handles.source_t_in[n].as_mut().expect("source").push(t_in);
                handles.source_heat[n].as_mut().expect("source").push(heat);
            }

            if let Some(load) = &node.load {
                let tag = format!("node {} load", node.id);
                let t_out = program.add_var(
                    &format!("trout_{}_t{t}", node.id),
                    load.t_out_min,
                    load.t_out_max,
                )?;
                let spread_box = (node.ts_min - load.t_out_max, node.ts_max - load.t_out_min);
                let spread = program.add_var(
                    &format!("dtl_{}_t{t}", node.id),
                    spread_box.0,
                    spread_box.1,
                )?;
                program.add_eq(
                    LinExpr::var(spread) - LinExpr::var(ts) + LinExpr::var(t_out),
                    0.0,
                )?;
                let demand = node.demand[t];
                let heat = program.add_var(&format!("hload_{}_t{t}", node.id), demand, demand)?;
                let m_out = hydraulics.load_outflow[n].as_ref().expect("checked")[t];
                registry.register(heat, m_out, spread, c_mw, TermFamily::HeatTransfer, &tag, t);
                handles.load_t_out[n].as_mut().expect("load").push(t_out);
                handles.load_heat[n].as_mut().expect("load").push(heat);
            }
        }

        // --- pipe temperature dynamics, both networks --------------------------
        for (p, pipe) in pipes.iter().enumerate() {
            let tag = format!("pipe {}-{}", pipe.from, pipe.to);
            let from = case
                .node_pos(pipe.from)
                .ok_or_else(|| BuildError::Data(format!("{tag}: node {} does not exist", pipe.from)))?;
            let to = case
                .node_pos(pipe.to)
                .ok_or_else(|| BuildError::Data(format!("{tag}: node {} does not exist", pipe.to)))?;
            let flow = hydraulics.pipe_flow[p][t];
            let flow_box = program.bounds(flow);
            // Thermal inertia (kg/s per K of average-temperature change per
            // step) and standing loss to the ground (kg/s).
            let inertia = pipe.water_mass(&case.constants) / dt;
            let loss = pipe.conductivity * pipe.length / case.constants.specific_heat;
            let ground = case.dhs.ground_temp[t];

            // (network, box, inlet node temp, init, handle sinks)
            let sides = [
                ("s", (pipe.ts_min, pipe.ts_max), handles.node_ts[from][t], pipe.t_init_supply),
                ("r", (pipe.tr_min, pipe.tr_max), handles.node_tr[to][t], pipe.t_init_return),
            ];
            for (net, temp_box, inlet_temp, t_init) in sides {
                let name = |role: &str| format!("tp{net}{role}_{}_{}_t{t}", pipe.from, pipe.to);
                let t_in = program.add_var(&name("in"), temp_box.0, temp_box.1)?;
                let t_out = program.add_var(&name("out"), temp_box.0, temp_box.1)?;
                let t_avg = program.add_var(&name("avg"), temp_box.0, temp_box.1)?;
                let drop_box = (temp_box.0 - temp_box.1, temp_box.1 - temp_box.0);
                let drop = program.add_var(
                    &format!("dtp{net}_{}_{}_t{t}", pipe.from, pipe.to),
                    drop_box.0,
                    drop_box.1,
                )?;
                let (z_lo, z_hi) = corner_box(1.0, flow_box, drop_box);
                let adv = program.add_var(
                    &format!("zadv{net}_{}_{}_t{t}", pipe.from, pipe.to),
                    z_lo,
                    z_hi,
                )?;

                // Water enters at the mixed temperature of its inlet node.
                program.add_eq(LinExpr::var(t_in) - LinExpr::var(inlet_temp), 0.0)?;
                // T̄ = (T_in + T_out) / 2.
                let mut avg = LinExpr::term(t_avg, 2.0);
                avg.add_term(t_in, -1.0);
                avg.add_term(t_out, -1.0);
                program.add_eq(avg, 0.0)?;
                // Temperature drop along the pipe.
                program.add_eq(
                    LinExpr::var(drop) - LinExpr::var(t_out) + LinExpr::var(t_in),
                    0.0,
                )?;
                // One-step balance; before the horizon the pipe sits at its
                // initial average temperature.
                let mut balance = LinExpr::term(t_avg, inertia + loss);
                balance.add_term(adv, 1.0);
                let mut rhs = loss * ground;
                if t == 0 {
                    rhs += inertia * t_init;
                } else {
                    let prev = match net {
                        "s" => handles.supply_avg[p][t - 1],
                        _ => handles.return_avg[p][t - 1],
                    };
                    balance.add_term(prev, -inertia);
                }
                program.add_eq(balance, rhs)?;
                let family_tag = format!("{tag} {}", if net == "s" { "supply" } else { "return" });
                registry.register(adv, flow, drop, 1.0, TermFamily::Std, family_tag, t);

                let (h_in, h_out, h_avg) = match net {
                    "s" => (&mut handles.supply_in, &mut handles.supply_out, &mut handles.supply_avg),
                    _ => (&mut handles.return_in, &mut handles.return_out, &mut handles.return_avg),
                };
                h_in[p].push(t_in);
                h_out[p].push(t_out);
                h_avg[p].push(t_avg);
            }
        }

        // --- nodal mixing, both networks ----------------------------------------
        for (n, node) in nodes.iter().enumerate() {
            for net in ["supply", "return"] {
                let mut inflows: Vec<Inflow> = Vec::new();
                for (p, pipe) in pipes.iter().enumerate() {
                    // Supply water arrives at `to`; return water at `from`.
                    let arrives = match net {
                        "supply" => pipe.to == node.id,
                        _ => pipe.from == node.id,
                    };
                    if !arrives {
                        continue;
                    }
                    let temp = match net {
                        "supply" => handles.supply_out[p][t],
                        _ => handles.return_out[p][t],
                    };
                    inflows.push(Inflow {
                        temp,
                        temp_box: program.bounds(temp),
                        flow: hydraulics.pipe_flow[p][t],
                        flow_box: program.bounds(hydraulics.pipe_flow[p][t]),
                        tag: format!("pipe {}-{}", pipe.from, pipe.to),
                    });
                }
                if net == "supply" {
                    if let Some(t_in) = &handles.source_t_in[n] {
                        let flow = hydraulics.source_inflow[n].as_ref().expect("source")[t];
                        inflows.push(Inflow {
                            temp: t_in[t],
                            temp_box: program.bounds(t_in[t]),
                            flow,
                            flow_box: program.bounds(flow),
                            tag: "source".into(),
                        });
                    }
                } else if let Some(t_out) = &handles.load_t_out[n] {
                    let flow = hydraulics.load_outflow[n].as_ref().expect("load")[t];
                    inflows.push(Inflow {
                        temp: t_out[t],
                        temp_box: program.bounds(t_out[t]),
                        flow,
                        flow_box: program.bounds(flow),
                        tag: "load".into(),
                    });
                }

                let mixed = match net {
                    "supply" => handles.node_ts[n][t],
                    _ => handles.node_tr[n][t],
                };
                match inflows.as_slice() {
                    [] => {}
                    [only] => {
                        // Single stream: the flow cancels out of the mix.
                        program.add_eq(LinExpr::var(mixed) - LinExpr::var(only.temp), 0.0)?;
                    }
                    many => {
                        let tag = format!("node {} {net}", node.id);
                        let short = if net == "supply" { "s" } else { "r" };
                        let mut total_box = (0.0, 0.0);
                        for f in many {
                            total_box.0 += f.flow_box.0;
                            total_box.1 += f.flow_box.1;
                        }
                        let total = program.add_var(
                            &format!("wsum{short}_{}_t{t}", node.id),
                            total_box.0,
                            total_box.1,
                        )?;
                        let mut row = LinExpr::term(total, -1.0);
                        for f in many {
                            row.add_term(f.flow, 1.0);
                        }
                        program.add_eq(row, 0.0)?;
                        handles.mix_totals.push(MixTotal {
                            total,
                            streams: many.iter().map(|f| f.flow).collect(),
                        });

                        let mixed_box = program.bounds(mixed);
                        let (lo, hi) = corner_box(1.0, mixed_box, total_box);
                        let z_mix =
                            program.add_var(&format!("zmix{short}_{}_t{t}", node.id), lo, hi)?;
                        registry.register(z_mix, mixed, total, 1.0, TermFamily::Mixing, &tag, t);
                        let mut sum = LinExpr::term(z_mix, -1.0);
                        for (i, f) in many.iter().enumerate() {
                            let (lo, hi) = corner_box(1.0, f.temp_box, f.flow_box);
                            let z = program.add_var(
                                &format!("zmix{short}_{}_s{i}_t{t}", node.id),
                                lo,
                                hi,
                            )?;
                            registry.register(
                                z,
                                f.temp,
                                f.flow,
                                1.0,
                                TermFamily::Mixing,
                                format!("{tag} from {}", f.tag),
                                t,
                            );
                            sum.add_term(z, 1.0);
                        }
                        program.add_eq(sum, 0.0)?;
                    }
                }
            }
        }
    }

    Ok(handles)
}

/// Evaluates the thermal relations, in original bilinear form, at a primal
/// point. All families report relative two-sided deviations.
pub fn thermal_residuals(
    case: &Case,
    thermal: &ThermalVarHandles,
    hydraulics: &HydraulicVarHandles,
    power: &PowerVarHandles,
    solution: &Solution,
) -> ResidualReport {
    let mut report = ResidualReport::new();
    let s_base = case.eps.s_base_mva;
    let c_mw = case.constants.specific_heat_mw();
    let dt = case.grid.step_seconds;
    let nodes = &case.dhs.nodes;
    let pipes = &case.dhs.pipes;

    for t in 0..case.grid.periods {
        for (d, device) in case.eps.devices.iter().enumerate() {
            let Some(eta) = heat_factor(device) else {
                continue;
            };
            let h = solution.value(thermal.device_heat[d].as_ref().expect("heat device")[t]);
            let p = solution.value(power.device_p[d][t]);
            report.push(
                "heat-production",
                format!("device {}", device.id),
                t,
                relative_gap(h, eta * s_base * p),
            );
        }

        for (n, node) in nodes.iter().enumerate() {
            if node.is_source() {
                let m_in = solution.value(hydraulics.source_inflow[n].as_ref().expect("source")[t]);
                let t_in = solution.value(thermal.source_t_in[n].as_ref().expect("source")[t]);
                let tr = solution.value(thermal.node_tr[n][t]);
                let mut heat = 0.0;
                for (d, device) in case.eps.devices.iter().enumerate() {
                    if heat_node(device) == Some(node.id) {
                        heat +=
                            solution.value(thermal.device_heat[d].as_ref().expect("producer")[t]);
                    }
                }
                report.push(
                    "source-transfer",
                    format!("node {}", node.id),
                    t,
                    relative_gap(heat, c_mw * m_in * (t_in - tr)),
                );
            }
            if node.is_load() {
                let m_out = solution.value(hydraulics.load_outflow[n].as_ref().expect("load")[t]);
                let ts = solution.value(thermal.node_ts[n][t]);
                let t_out = solution.value(thermal.load_t_out[n].as_ref().expect("load")[t]);
                report.push(
                    "load-transfer",
                    format!("node {}", node.id),
                    t,
                    relative_gap(node.demand[t], c_mw * m_out * (ts - t_out)),
                );
            }
        }

        for (p, pipe) in pipes.iter().enumerate() {
            let tag = format!("pipe {}-{}", pipe.from, pipe.to);
            let m = solution.value(hydraulics.pipe_flow[p][t]);
            let inertia = pipe.water_mass(&case.constants) / dt;
            let loss = pipe.conductivity * pipe.length / case.constants.specific_heat;
            let ground = case.dhs.ground_temp[t];
            let sides = [
                ("std-supply", &thermal.supply_in, &thermal.supply_out, &thermal.supply_avg, pipe.t_init_supply),
                ("std-return", &thermal.return_in, &thermal.return_out, &thermal.return_avg, pipe.t_init_return),
            ];
            for (family, t_in, t_out, t_avg, t_init) in sides {
                let avg = solution.value(t_avg[p][t]);
                let prev = if t == 0 {
                    t_init
                } else {
                    solution.value(t_avg[p][t - 1])
                };
                let lhs = (inertia + loss) * avg + m * (solution.value(t_out[p][t]) - solution.value(t_in[p][t]));
                let rhs = inertia * prev + loss * ground;
                report.push(family, tag.clone(), t, relative_gap(lhs, rhs));
            }
        }

        for (n, node) in nodes.iter().enumerate() {
            for net in ["supply", "return"] {
                // (temp, flow) value pairs of every inflow stream.
                let mut streams: Vec<(f64, f64)> = Vec::new();
                for (p, pipe) in pipes.iter().enumerate() {
                    let (arrives, temp) = match net {
                        "supply" => (pipe.to == node.id, &thermal.supply_out),
                        _ => (pipe.from == node.id, &thermal.return_out),
                    };
                    if arrives {
                        streams.push((
                            solution.value(temp[p][t]),
                            solution.value(hydraulics.pipe_flow[p][t]),
                        ));
                    }
                }
                if net == "supply" {
                    if let Some(t_in) = &thermal.source_t_in[n] {
                        streams.push((
                            solution.value(t_in[t]),
                            solution.value(hydraulics.source_inflow[n].as_ref().expect("source")[t]),
                        ));
                    }
                } else if let Some(t_out) = &thermal.load_t_out[n] {
                    streams.push((
                        solution.value(t_out[t]),
                        solution.value(hydraulics.load_outflow[n].as_ref().expect("load")[t]),
                    ));
                }
                if streams.is_empty() {
                    continue;
                }
                let mixed = match net {
                    "supply" => solution.value(thermal.node_ts[n][t]),
                    _ => solution.value(thermal.node_tr[n][t]),
                };
                let total: f64 = streams.iter().map(|(_, m)| m).sum();
                let carried: f64 = streams.iter().map(|(temp, m)| temp * m).sum();
                let family = if net == "supply" { "supply-mixing" } else { "return-mixing" };
                report.push(
                    family,
                    format!("node {}", node.id),
                    t,
                    relative_gap(mixed * total, carried),
                );
            }
        }
    }
    report
}
