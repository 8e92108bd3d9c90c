//! Branch-flow model of the radial feeder: nodal balances, voltage drops,
//! the per-branch second-order cone, device boxes/ramps, and the operating
//! cost.
//!
//! All electric quantities are in per-unit on the case's MVA base; pump
//! draws arrive in MW from the hydraulic block and are scaled inside the
//! balance rows. The squared-voltage/squared-current formulation makes
//! every relation linear except the branch cone
//! `‖(2P, 2Q, l − v)‖₂ ≤ l + v` (equivalent to `P² + Q² ≤ l·v`), which is
//! the model's one inequality-by-design: the underlying current identity
//! `l·v = P² + Q²` is relaxed, so residuals report its violation one-sided
//! (cone slack counts as slack, not error).
//!
//! Device conventions:
//! - generators and cogeneration units inject P and Q within their boxes;
//! - heat pumps consume active power only (no reactive handle);
//! - photovoltaic units may curtail (`P ≤ forecast`) and hold `Q = 0`;
//! - wind units may curtail and run at a fixed power factor,
//!   `Q = η·P`, added as a defining equality (their case reactive box is
//!   ignored in favor of the derived one);
//! - ramp limits apply to generators, cogeneration and heat pumps, with
//!   the first period measured against the case's pre-horizon output.
//!
//! The root bus's squared voltage is pinned through its case box (the
//! bundled cases fix it at 1 p.u.), making it the feeder reference.

use std::collections::HashMap;

use conic::{ConicProgram, LinExpr, Solution, VarId};

use super::{BuildError, HydraulicVarHandles, ResidualReport};
use crate::case::{Case, DeviceKind, PipeKind};

/// Variable handles of the electric block.
///
/// Outer index: element position in `case.eps.*`; inner index: period.
#[derive(Clone, Debug)]
pub struct PowerVarHandles {
    /// Device active power (p.u.); consumption for heat pumps.
    pub device_p: Vec<Vec<VarId>>,
    /// Device reactive power (p.u.); `None` for heat pumps.
    pub device_q: Vec<Option<Vec<VarId>>>,
    /// Sending-end active flow per branch (p.u.).
    pub branch_p: Vec<Vec<VarId>>,
    /// Sending-end reactive flow per branch (p.u.).
    pub branch_q: Vec<Vec<VarId>>,
    /// Squared current magnitude per branch (p.u.).
    pub branch_l: Vec<Vec<VarId>>,
    /// Squared voltage magnitude per bus (p.u.).
    pub bus_v: Vec<Vec<VarId>>,
    /// Operating cost over the horizon ($): Σ cost·P·Δt. Also installed as
    /// the program objective; kept here so recovery can report the
    /// unpenalized cost of any point.
    pub cost: LinExpr,
}

/// Sign of a device's active power in the nodal balance.
fn injection_sign(kind: &DeviceKind) -> f64 {
    match kind {
        DeviceKind::Generator | DeviceKind::Chp { .. } | DeviceKind::Pv { .. } | DeviceKind::Wind { .. } => 1.0,
        DeviceKind::HeatPump { .. } => -1.0,
    }
}

/// Builds the electric network constraints and the cost objective.
///
/// `hydraulics` supplies the pump power variables consumed by the nodal
/// balances; pass the handles returned by
/// [`build_hydraulic_relations`](super::build_hydraulic_relations) on the
/// same program.
pub fn build_power_constraints(
    case: &Case,
    program: &mut ConicProgram,
    hydraulics: &HydraulicVarHandles,
) -> Result<PowerVarHandles, BuildError> {
    let periods = case.grid.periods;
    let s_base = case.eps.s_base_mva;
    let step_hours = case.grid.step_hours();
    let buses = &case.eps.buses;
    let branches = &case.eps.branches;
    let devices = &case.eps.devices;

    let bus_pos: HashMap<usize, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let bus_of = |id: usize, tag: &str| -> Result<usize, BuildError> {
        bus_pos
            .get(&id)
            .copied()
            .ok_or_else(|| BuildError::Data(format!("{tag}: bus {id} does not exist")))
    };

    // Pump draws per bus, from the hydraulic handles.
    let mut pumps_at_bus: Vec<Vec<&Vec<VarId>>> = vec![Vec::new(); buses.len()];
    for (p, pipe) in case.dhs.pipes.iter().enumerate() {
        if let PipeKind::Pump(spec) = &pipe.kind {
            let tag = format!("pipe {}-{}", pipe.from, pipe.to);
            let power = hydraulics.pump_power[p]
                .as_ref()
                .ok_or_else(|| BuildError::Data(format!("{tag}: pump power handle missing")))?;
            if power.len() != periods {
                return Err(BuildError::Data(format!(
                    "{tag}: pump power handle covers {} periods, grid has {periods}",
                    power.len()
                )));
            }
            pumps_at_bus[bus_of(spec.bus, &tag)?].push(power);
        }
    }

    for device in devices {
        let tag = format!("device {}", device.id);
        bus_of(device.bus, &tag)?;
        let forecast_len = match &device.kind {
            DeviceKind::Pv { forecast } | DeviceKind::Wind { forecast, .. } => forecast.len(),
            _ => periods,
        };
        if forecast_len != periods {
            return Err(BuildError::Data(format!(
                "{tag}: forecast has {forecast_len} entries, grid has {periods} periods"
            )));
        }
    }
    for bus in buses {
        if bus.p_load.len() != periods || bus.q_load.len() != periods {
            return Err(BuildError::Data(format!(
                "bus {}: load series length differs from the grid",
                bus.id
            )));
        }
    }

    let mut handles = PowerVarHandles {
        device_p: vec![Vec::with_capacity(periods); devices.len()],
        device_q: devices
            .iter()
            .map(|d| (!matches!(d.kind, DeviceKind::HeatPump { .. })).then(|| Vec::with_capacity(periods)))
            .collect(),
        branch_p: vec![Vec::with_capacity(periods); branches.len()],
        branch_q: vec![Vec::with_capacity(periods); branches.len()],
        branch_l: vec![Vec::with_capacity(periods); branches.len()],
        bus_v: vec![Vec::with_capacity(periods); buses.len()],
        cost: LinExpr::zero(),
    };

    for t in 0..periods {
        // --- variables ------------------------------------------------------
        for (d, device) in devices.iter().enumerate() {
            let (p_lb, p_ub) = match &device.kind {
                DeviceKind::Pv { forecast } | DeviceKind::Wind { forecast, .. } => {
                    let ub = device.p_max.min(forecast[t]);
                    (device.p_min.min(ub), ub)
                }
                _ => (device.p_min, device.p_max),
            };
            let p = program.add_var(
                &format!("p_{}_t{t}", device.id),
                p_lb / s_base,
                p_ub / s_base,
            )?;
            handles.device_p[d].push(p);
            if device.cost != 0.0 {
                handles.cost.add_term(p, device.cost * s_base * step_hours);
            }
            let q_bounds = match &device.kind {
                DeviceKind::Generator | DeviceKind::Chp { .. } => {
                    Some((device.q_min / s_base, device.q_max / s_base))
                }
                DeviceKind::Pv { .. } => Some((0.0, 0.0)),
                DeviceKind::Wind { reactive_ratio, .. } => {
                    let (a, b) = (reactive_ratio * p_lb / s_base, reactive_ratio * p_ub / s_base);
                    Some((a.min(b), a.max(b)))
                }
                DeviceKind::HeatPump { .. } => None,
            };
            if let Some((q_lb, q_ub)) = q_bounds {
                let q = program.add_var(&format!("q_{}_t{t}", device.id), q_lb, q_ub)?;
                handles.device_q[d].as_mut().expect("reactive device").push(q);
                if let DeviceKind::Wind { reactive_ratio, .. } = &device.kind {
                    // Fixed power factor: Q = η·P.
                    program.add_eq(LinExpr::var(q) - LinExpr::term(p, *reactive_ratio), 0.0)?;
                }
            }
        }
        for (b, bus) in buses.iter().enumerate() {
            let v = program.add_var(&format!("v_{}_t{t}", bus.id), bus.v_min, bus.v_max)?;
            handles.bus_v[b].push(v);
        }
        for (br, branch) in branches.iter().enumerate() {
            let pf = program.add_var(
                &format!("pf_{}_{}_t{t}", branch.from, branch.to),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )?;
            let qf = program.add_var(
                &format!("qf_{}_{}_t{t}", branch.from, branch.to),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )?;
            let l = program.add_var(
                &format!("l_{}_{}_t{t}", branch.from, branch.to),
                0.0,
                branch.l_max,
            )?;
            handles.branch_p[br].push(pf);
            handles.branch_q[br].push(qf);
            handles.branch_l[br].push(l);
        }

        // --- nodal balances ---------------------------------------------------
        for (b, bus) in buses.iter().enumerate() {
            let mut p_bal = LinExpr::zero();
            let mut q_bal = LinExpr::zero();
            for (d, device) in devices.iter().enumerate() {
                if device.bus != bus.id {
                    continue;
                }
                p_bal.add_term(handles.device_p[d][t], injection_sign(&device.kind));
                if let Some(q) = &handles.device_q[d] {
                    q_bal.add_term(q[t], 1.0);
                }
            }
            for power in &pumps_at_bus[b] {
                p_bal.add_term(power[t], -1.0 / s_base);
            }
            for (br, branch) in branches.iter().enumerate() {
                if branch.from == bus.id {
                    p_bal.add_term(handles.branch_p[br][t], -1.0);
                    q_bal.add_term(handles.branch_q[br][t], -1.0);
                }
                if branch.to == bus.id {
                    p_bal.add_term(handles.branch_p[br][t], 1.0);
                    p_bal.add_term(handles.branch_l[br][t], -branch.r);
                    q_bal.add_term(handles.branch_q[br][t], 1.0);
                    q_bal.add_term(handles.branch_l[br][t], -branch.x);
                }
            }
            program.add_eq(p_bal, bus.p_load[t] / s_base)?;
            program.add_eq(q_bal, bus.q_load[t] / s_base)?;
        }

        // --- branch voltage drops and cones ------------------------------------
        for (br, branch) in branches.iter().enumerate() {
            let tag = format!("branch {}-{}", branch.from, branch.to);
            let from = bus_of(branch.from, &tag)?;
            let to = bus_of(branch.to, &tag)?;
            let pf = handles.branch_p[br][t];
            let qf = handles.branch_q[br][t];
            let l = handles.branch_l[br][t];
            let v_from = handles.bus_v[from][t];
            let v_to = handles.bus_v[to][t];
            let z2 = branch.r * branch.r + branch.x * branch.x;
            let mut drop = LinExpr::var(v_to) - LinExpr::var(v_from);
            drop.add_term(pf, 2.0 * branch.r);
            drop.add_term(qf, 2.0 * branch.x);
            drop.add_term(l, -z2);
            program.add_eq(drop, 0.0)?;
            program.add_soc(
                LinExpr::var(l) + LinExpr::var(v_from),
                vec![
                    LinExpr::term(pf, 2.0),
                    LinExpr::term(qf, 2.0),
                    LinExpr::var(l) - LinExpr::var(v_from),
                ],
            )?;
        }

        // --- ramps --------------------------------------------------------------
        for (d, device) in devices.iter().enumerate() {
            let ramped = matches!(
                device.kind,
                DeviceKind::Generator | DeviceKind::Chp { .. } | DeviceKind::HeatPump { .. }
            );
            if !ramped || !device.ramp.is_finite() {
                continue;
            }
            let step = device.ramp * step_hours / s_base;
            let p = handles.device_p[d][t];
            if t == 0 {
                let anchor = device.initial_p / s_base;
                program.add_le(LinExpr::var(p), anchor + step)?;
                program.add_ge(LinExpr::var(p), anchor - step)?;
            } else {
                let prev = handles.device_p[d][t - 1];
                let delta = LinExpr::var(p) - LinExpr::var(prev);
                program.add_le(delta.clone(), step)?;
                program.add_ge(delta, -step)?;
            }
        }
    }

    program.add_objective(handles.cost.clone())?;
    Ok(handles)
}

/// Evaluates the electric model relations at a primal point.
///
/// Balances and voltage drops report absolute per-unit deviations; the
/// branch-current relation reports `P² + Q² − l·v` (positive = outside the
/// cone, negative = relaxation slack); wind power-factor couplings report
/// absolute deviations.
pub fn power_residuals(
    case: &Case,
    power: &PowerVarHandles,
    hydraulics: &HydraulicVarHandles,
    solution: &Solution,
) -> ResidualReport {
    let mut report = ResidualReport::new();
    let s_base = case.eps.s_base_mva;
    let buses = &case.eps.buses;
    let branches = &case.eps.branches;
    let devices = &case.eps.devices;
    let bus_pos: HashMap<usize, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();

    for t in 0..case.grid.periods {
        for bus in buses.iter() {
            let mut p_lhs = 0.0;
            let mut q_lhs = 0.0;
            for (d, device) in devices.iter().enumerate() {
                if device.bus != bus.id {
                    continue;
                }
                p_lhs += injection_sign(&device.kind) * solution.value(power.device_p[d][t]);
                if let Some(q) = &power.device_q[d] {
                    q_lhs += solution.value(q[t]);
                }
            }
            for (p, pipe) in case.dhs.pipes.iter().enumerate() {
                if let PipeKind::Pump(spec) = &pipe.kind {
                    if spec.bus == bus.id {
                        if let Some(power_vars) = &hydraulics.pump_power[p] {
                            p_lhs -= solution.value(power_vars[t]) / s_base;
                        }
                    }
                }
            }
            for (br, branch) in branches.iter().enumerate() {
                if branch.from == bus.id {
                    p_lhs -= solution.value(power.branch_p[br][t]);
                    q_lhs -= solution.value(power.branch_q[br][t]);
                }
                if branch.to == bus.id {
                    let l = solution.value(power.branch_l[br][t]);
                    p_lhs += solution.value(power.branch_p[br][t]) - branch.r * l;
                    q_lhs += solution.value(power.branch_q[br][t]) - branch.x * l;
                }
            }
            let tag = format!("bus {}", bus.id);
            report.push("p-balance", tag.clone(), t, (p_lhs - bus.p_load[t] / s_base).abs());
            report.push("q-balance", tag, t, (q_lhs - bus.q_load[t] / s_base).abs());
        }

        for (br, branch) in branches.iter().enumerate() {
            let tag = format!("branch {}-{}", branch.from, branch.to);
            let (Some(&from), Some(&to)) = (bus_pos.get(&branch.from), bus_pos.get(&branch.to))
            else {
                continue;
            };
            let pf = solution.value(power.branch_p[br][t]);
            let qf = solution.value(power.branch_q[br][t]);
            let l = solution.value(power.branch_l[br][t]);
            let v_from = solution.value(power.bus_v[from][t]);
            let v_to = solution.value(power.bus_v[to][t]);
            let z2 = branch.r * branch.r + branch.x * branch.x;
            let drop = v_to - v_from + 2.0 * (branch.r * pf + branch.x * qf) - z2 * l;
            report.push("voltage-drop", tag.clone(), t, drop.abs());
            report.push("branch-cone", tag, t, pf * pf + qf * qf - l * v_from);
        }

        for (d, device) in devices.iter().enumerate() {
            if let DeviceKind::Wind { reactive_ratio, .. } = &device.kind {
                let p = solution.value(power.device_p[d][t]);
                let q = solution.value(power.device_q[d].as_ref().expect("wind has Q")[t]);
                report.push(
                    "wind-pf",
                    format!("device {}", device.id),
                    t,
                    (q - reactive_ratio * p).abs(),
                );
            }
        }
    }
    report
}
