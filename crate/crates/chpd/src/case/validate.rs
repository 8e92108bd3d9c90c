//! Semantic validation of parsed cases.
//!
//! The loader only guarantees that the file is well-formed; this pass checks
//! the physics and topology assumptions the model builders rely on: both
//! networks must be trees oriented away from their sources, every referenced
//! id must exist, every bound pair must be ordered, and every series must
//! match the time grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Case, DeviceKind, PipeKind};

/// How bad a finding is. `Error` means the model builders would produce an
/// unsolvable or ill-defined program; `Warning` flags suspicious but legal
/// data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    fn error(&mut self, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warning(&mut self, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity: Severity::Warning,
            message: message.into(),
        });
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "no issues found");
        }
        for issue in &self.issues {
            let tag = match issue.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "{tag}: {}", issue.message)?;
        }
        Ok(())
    }
}

fn check_box(report: &mut ValidationReport, what: &str, lo: f64, hi: f64) {
    if !(lo <= hi) {
        report.error(format!("{what}: lower bound {lo} exceeds upper bound {hi}"));
    }
}

fn check_series(report: &mut ValidationReport, what: &str, len: usize, periods: usize) {
    if len != periods {
        report.error(format!(
            "{what}: series has {len} entries, grid has {periods} periods"
        ));
    }
}

/// Checks that the directed edges `(from, to)` form an undirected tree on
/// `ids` oriented so that every node is reachable from some root in `roots`
/// by following edge direction. Non-root nodes may have several incoming
/// edges (flows merging, as below a pair of plants feeding one header);
/// roots must have none. Emits errors naming `net` otherwise.
fn check_oriented_tree(
    report: &mut ValidationReport,
    net: &str,
    ids: &BTreeSet<usize>,
    edges: &[(usize, usize)],
    roots: &BTreeSet<usize>,
) {
    if edges.len() + 1 != ids.len() {
        report.error(format!(
            "{net}: {} edges cannot span {} nodes as a tree",
            edges.len(),
            ids.len()
        ));
        return;
    }
    let mut indegree: BTreeMap<usize, usize> = ids.iter().map(|&i| (i, 0)).collect();
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(from, to) in edges {
        *indegree.get_mut(&to).expect("endpoints checked earlier") += 1;
        children.entry(from).or_default().push(to);
    }
    for (&id, &deg) in &indegree {
        let is_root = roots.contains(&id);
        if is_root && deg != 0 {
            report.error(format!("{net}: node {id} is a root but has an incoming edge"));
        }
        if !is_root && deg == 0 {
            report.error(format!(
                "{net}: node {id} has no incoming edge and is not a root"
            ));
        }
    }
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut stack: Vec<usize> = roots.iter().copied().collect();
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(kids) = children.get(&id) {
            stack.extend(kids.iter().copied());
        }
    }
    for &id in ids {
        if !seen.contains(&id) {
            report.error(format!("{net}: node {id} is not reachable from any root"));
        }
    }
}

/// Runs every semantic check and collects the findings.
pub fn validate_case(case: &Case) -> ValidationReport {
    let mut report = ValidationReport::default();
    let periods = case.grid.periods;

    if periods == 0 {
        report.error("grid: at least one period is required");
    }
    if !(case.grid.step_seconds > 0.0) {
        report.error("grid: step_seconds must be positive");
    }
    if !(case.eps.s_base_mva > 0.0) {
        report.error("grid base: s_base_mva must be positive");
    }
    for (what, value) in [
        ("water_density", case.constants.water_density),
        ("specific_heat", case.constants.specific_heat),
        ("gravity", case.constants.gravity),
    ] {
        if !(value > 0.0) {
            report.error(format!("constants: {what} must be positive"));
        }
    }
    check_series(
        &mut report,
        "ground temperature",
        case.dhs.ground_temp.len(),
        periods,
    );

    // --- electric network -------------------------------------------------
    let mut bus_ids = BTreeSet::new();
    for bus in &case.eps.buses {
        if !bus_ids.insert(bus.id) {
            report.error(format!("bus {}: duplicate id", bus.id));
        }
        if !(bus.v_min > 0.0) {
            report.error(format!("bus {}: v_min must be positive", bus.id));
        }
        check_box(&mut report, &format!("bus {} voltage", bus.id), bus.v_min, bus.v_max);
        check_series(
            &mut report,
            &format!("bus {} active demand", bus.id),
            bus.p_load.len(),
            periods,
        );
        check_series(
            &mut report,
            &format!("bus {} reactive demand", bus.id),
            bus.q_load.len(),
            periods,
        );
    }
    if !bus_ids.contains(&case.eps.root_bus) {
        report.error(format!("root bus {} does not exist", case.eps.root_bus));
    }

    let mut feeder_edges = Vec::new();
    let mut endpoints_ok = true;
    for branch in &case.eps.branches {
        let what = format!("branch ({}, {})", branch.from, branch.to);
        for end in [branch.from, branch.to] {
            if !bus_ids.contains(&end) {
                report.error(format!("{what}: bus {end} does not exist"));
                endpoints_ok = false;
            }
        }
        if branch.r < 0.0 || branch.x < 0.0 {
            report.error(format!("{what}: impedance must be nonnegative"));
        }
        if !(branch.l_max > 0.0) {
            report.error(format!("{what}: l_max must be positive"));
        }
        feeder_edges.push((branch.from, branch.to));
    }
    if endpoints_ok && bus_ids.contains(&case.eps.root_bus) {
        let roots = BTreeSet::from([case.eps.root_bus]);
        check_oriented_tree(&mut report, "feeder", &bus_ids, &feeder_edges, &roots);
    }

    // --- heating network ---------------------------------------------------
    let mut node_ids = BTreeSet::new();
    let mut source_ids = BTreeSet::new();
    for node in &case.dhs.nodes {
        let what = format!("heating node {}", node.id);
        if !node_ids.insert(node.id) {
            report.error(format!("{what}: duplicate id"));
        }
        check_box(&mut report, &format!("{what} supply temperature"), node.ts_min, node.ts_max);
        check_box(&mut report, &format!("{what} return temperature"), node.tr_min, node.tr_max);
        check_box(&mut report, &format!("{what} supply pressure"), node.ps_min, node.ps_max);
        check_box(&mut report, &format!("{what} return pressure"), node.pr_min, node.pr_max);
        check_series(&mut report, &format!("{what} demand"), node.demand.len(), periods);
        if node.demand.iter().any(|&d| d < 0.0) {
            report.warning(format!("{what}: demand has negative entries"));
        }
        if !node.is_load() && node.demand.iter().any(|&d| d != 0.0) {
            report.error(format!("{what}: nonzero demand on a node without a load side"));
        }
        if let Some(load) = &node.load {
            check_box(&mut report, &format!("{what} outlet flow"), load.m_out_min, load.m_out_max);
            check_box(
                &mut report,
                &format!("{what} outlet temperature"),
                load.t_out_min,
                load.t_out_max,
            );
            if !(load.hx_area > 0.0) {
                report.error(format!("{what}: hx_area must be positive"));
            }
            if load.minor_loss < 0.0 {
                report.error(format!("{what}: minor_loss must be nonnegative"));
            }
        }
        if let Some(source) = &node.source {
            source_ids.insert(node.id);
            check_box(&mut report, &format!("{what} inlet flow"), source.m_in_min, source.m_in_max);
            check_box(
                &mut report,
                &format!("{what} inlet temperature"),
                source.t_in_min,
                source.t_in_max,
            );
        }
    }
    if source_ids.is_empty() {
        report.error("heating network has no source node");
    }

    let mut pipe_edges = Vec::new();
    let mut pipe_endpoints_ok = true;
    for pipe in &case.dhs.pipes {
        let what = format!("pipe ({}, {})", pipe.from, pipe.to);
        for end in [pipe.from, pipe.to] {
            if !node_ids.contains(&end) {
                report.error(format!("{what}: heating node {end} does not exist"));
                pipe_endpoints_ok = false;
            }
        }
        for (field, value) in [
            ("length", pipe.length),
            ("diameter", pipe.diameter),
            ("roughness", pipe.roughness),
            ("reynolds", pipe.reynolds),
        ] {
            if !(value > 0.0) {
                report.error(format!("{what}: {field} must be positive"));
            }
        }
        if pipe.conductivity < 0.0 {
            report.error(format!("{what}: conductivity must be nonnegative"));
        }
        if pipe.length > 0.0 && pipe.diameter > 0.0 && pipe.roughness > 0.0 && pipe.reynolds > 0.0
        {
            let f = pipe.friction_factor();
            if !(f.is_finite() && f > 0.0) {
                report.error(format!(
                    "{what}: friction factor is undefined for roughness/diameter/Reynolds \
                     combination (correlation log argument must be positive and not 1)"
                ));
            }
        }
        if pipe.m_min < 0.0 {
            report.error(format!("{what}: m_min must be nonnegative (flow follows pipe direction)"));
        }
        check_box(&mut report, &format!("{what} flow"), pipe.m_min, pipe.m_max);
        check_box(&mut report, &format!("{what} supply temperature"), pipe.ts_min, pipe.ts_max);
        check_box(&mut report, &format!("{what} return temperature"), pipe.tr_min, pipe.tr_max);
        match &pipe.kind {
            PipeKind::Friction => {}
            PipeKind::Valve { dp_max } => {
                if *dp_max < 0.0 {
                    report.error(format!("{what}: valve dp_max must be nonnegative"));
                }
            }
            PipeKind::Pump(pump) => {
                if !(pump.efficiency > 0.0 && pump.efficiency <= 1.0) {
                    report.error(format!("{what}: pump efficiency must lie in (0, 1]"));
                }
                if !(pump.p_max > 0.0) {
                    report.error(format!("{what}: pump p_max must be positive"));
                }
                for (field, value) in [
                    ("gamma1", pump.gamma1),
                    ("gamma2", pump.gamma2),
                    ("gamma3", pump.gamma3),
                ] {
                    if !(value > 0.0) {
                        report.error(format!("{what}: pump {field} must be positive"));
                    }
                }
                if !bus_ids.contains(&pump.bus) {
                    report.error(format!("{what}: pump bus {} does not exist", pump.bus));
                }
            }
        }
        pipe_edges.push((pipe.from, pipe.to));
    }
    if pipe_endpoints_ok && !source_ids.is_empty() {
        check_oriented_tree(&mut report, "heating network", &node_ids, &pipe_edges, &source_ids);
    }

    // --- devices ------------------------------------------------------------
    let mut device_ids = BTreeSet::new();
    let mut heat_nodes_used = BTreeSet::new();
    for device in &case.eps.devices {
        let what = format!("device {}", device.id);
        if !device_ids.insert(device.id.clone()) {
            report.error(format!("{what}: duplicate id"));
        }
        if !bus_ids.contains(&device.bus) {
            report.error(format!("{what}: bus {} does not exist", device.bus));
        }
        check_box(&mut report, &format!("{what} active power"), device.p_min, device.p_max);
        check_box(&mut report, &format!("{what} reactive power"), device.q_min, device.q_max);
        if !(device.ramp > 0.0) {
            report.error(format!("{what}: ramp must be positive"));
        }
        if device.cost < 0.0 {
            report.warning(format!("{what}: negative marginal cost"));
        }
        match &device.kind {
            DeviceKind::Generator => {}
            DeviceKind::Chp { power_to_heat, node } => {
                if !(*power_to_heat > 0.0) {
                    report.error(format!("{what}: power_to_heat must be positive"));
                }
                if !source_ids.contains(node) {
                    report.error(format!("{what}: heating node {node} is not a source"));
                }
                heat_nodes_used.insert(*node);
            }
            DeviceKind::HeatPump { cop, node } => {
                if !(*cop > 0.0) {
                    report.error(format!("{what}: cop must be positive"));
                }
                if !source_ids.contains(node) {
                    report.error(format!("{what}: heating node {node} is not a source"));
                }
                heat_nodes_used.insert(*node);
            }
            DeviceKind::Pv { forecast } => {
                check_series(&mut report, &format!("{what} forecast"), forecast.len(), periods);
                if forecast.iter().any(|&v| v < 0.0) {
                    report.error(format!("{what}: forecast has negative entries"));
                }
            }
            DeviceKind::Wind {
                forecast,
                reactive_ratio,
            } => {
                check_series(&mut report, &format!("{what} forecast"), forecast.len(), periods);
                if forecast.iter().any(|&v| v < 0.0) {
                    report.error(format!("{what}: forecast has negative entries"));
                }
                if *reactive_ratio < 0.0 {
                    report.error(format!("{what}: reactive_ratio must be nonnegative"));
                }
            }
        }
    }
    for &id in &source_ids {
        if !heat_nodes_used.contains(&id) {
            report.warning(format!(
                "heating node {id} is a source but no plant injects there"
            ));
        }
    }

    for (i, &flow) in case.dhs.constant_flow_settings.iter().enumerate() {
        if !(flow > 0.0) {
            report.error(format!(
                "constant_flow_settings[{i}]: flow must be positive"
            ));
        }
    }

    report
}
