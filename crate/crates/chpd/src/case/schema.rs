//! Case file schema: TOML loading and emission.
//!
//! Files carry a `schema = "chpd-case-v1"` marker. Demands and forecasts may
//! be given either as an explicit per-period series or as a base value times
//! a named profile from the `[series]` table; emission always writes
//! explicit series, so `load(emit(case))` reproduces the case exactly.
//!
//! Optional fields fall back to documented defaults (see the `*File` structs
//! below); everything structural — ids, topology, device kinds — is
//! explicit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    Branch, Bus, Case, Device, DeviceKind, Dhs, DhsNode, Eps, LoadSide, PhysicalConstants, Pipe,
    PipeKind, PumpSpec, SourceSide, TimeGrid,
};

pub const SCHEMA_TAG: &str = "chpd-case-v1";

/// Errors raised while reading or writing case files.
#[derive(Debug, Error)]
pub enum CaseFileError {
    #[error("file does not parse as TOML: {0}")]
    Toml(String),
    #[error("unsupported schema tag {0:?} (expected {SCHEMA_TAG:?})")]
    Schema(String),
    #[error("{0}")]
    Invalid(String),
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn invalid(msg: impl Into<String>) -> CaseFileError {
    CaseFileError::Invalid(msg.into())
}

// ---------------------------------------------------------------------------
// File-facing structs
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CaseFileRoot {
    schema: String,
    name: String,
    constants: ConstantsFile,
    grid: GridFile,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    series: BTreeMap<String, Vec<f64>>,
    eps: EpsFile,
    dhs: DhsFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstantsFile {
    water_density: f64,
    specific_heat: f64,
    gravity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridFile {
    step_seconds: f64,
    periods: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EpsFile {
    s_base_mva: f64,
    root_bus: usize,
    #[serde(rename = "bus")]
    buses: Vec<BusFile>,
    #[serde(rename = "branch")]
    branches: Vec<BranchFile>,
    #[serde(rename = "device")]
    devices: Vec<DeviceFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BusFile {
    id: usize,
    /// Defaults: v ∈ [0.81, 1.1025] p.u.².
    #[serde(skip_serializing_if = "Option::is_none")]
    v_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_max: Option<f64>,
    /// Demand: `p_series`, or `p_mw` × `profile`, or zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    p_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_mvar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_series: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_series: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BranchFile {
    from: usize,
    to: usize,
    r: f64,
    x: f64,
    /// Default: 1.0 p.u.².
    #[serde(skip_serializing_if = "Option::is_none")]
    l_max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceFile {
    id: String,
    /// "generator" | "chp" | "heat_pump" | "pv" | "wind".
    kind: String,
    bus: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_max: Option<f64>,
    /// Defaults: Q box [0, 0]; ramp unconstrained; initial_p at the box
    /// midpoint; cost 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    q_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
    // chp
    #[serde(skip_serializing_if = "Option::is_none")]
    power_to_heat: Option<f64>,
    // heat_pump
    #[serde(skip_serializing_if = "Option::is_none")]
    cop: Option<f64>,
    // chp + heat_pump: heating-network node
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<usize>,
    // pv + wind: available power = capacity × forecast profile
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forecast: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forecast_series: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reactive_ratio: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DhsFile {
    /// Ground temperature: `ground_series`, or the named profile under
    /// `ground`, or 8 °C.
    #[serde(skip_serializing_if = "Option::is_none")]
    ground: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_series: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constant_flow_settings: Vec<f64>,
    #[serde(rename = "node")]
    nodes: Vec<NodeFile>,
    #[serde(rename = "pipe")]
    pipes: Vec<PipeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    id: usize,
    /// "source" | "load" | "junction" | "source_load".
    kind: String,
    /// Defaults: T^S ∈ [50, 100] °C, T^R ∈ [25, 75] °C,
    /// p^S and p^R ∈ [5·10⁴, 1.2·10⁶] Pa.
    #[serde(skip_serializing_if = "Option::is_none")]
    ts_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ts_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ps_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ps_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pr_max: Option<f64>,
    // load side; demand = demand_series, or demand_mw × profile, or zero
    #[serde(skip_serializing_if = "Option::is_none")]
    demand_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    demand_series: Option<Vec<f64>>,
    /// Defaults: m^out ∈ [0.5, 40] kg/s, T^R,out ∈ [30, 75] °C,
    /// hx_area 0.01 m², minor_loss 10.
    #[serde(skip_serializing_if = "Option::is_none")]
    m_out_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_out_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_out_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_out_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hx_area: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    minor_loss: Option<f64>,
    /// Defaults: m^in ∈ [0, 250] kg/s, T^S,in ∈ [60, 100] °C.
    #[serde(skip_serializing_if = "Option::is_none")]
    m_in_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_in_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_in_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_in_max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PipeFile {
    from: usize,
    to: usize,
    length: f64,
    diameter: f64,
    /// Defaults: roughness 5·10⁻⁴ m, Re 10⁵, λ 1.5 W/(m·K),
    /// m ∈ [0, 300] kg/s, T^S ∈ [50, 100] °C, T^R ∈ [25, 75] °C,
    /// initial averages 70 / 45 °C, kind "friction".
    #[serde(skip_serializing_if = "Option::is_none")]
    roughness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reynolds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conductivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ts_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ts_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_init_supply: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_init_return: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pump: Option<PumpFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PumpFile {
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    efficiency: f64,
    p_max: f64,
    bus: usize,
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

struct SeriesResolver<'a> {
    series: &'a BTreeMap<String, Vec<f64>>,
    periods: usize,
}

impl SeriesResolver<'_> {
    /// Resolves `explicit`, else `base × profile`, else `base` repeated.
    fn resolve(
        &self,
        what: &str,
        base: Option<f64>,
        profile: Option<&String>,
        explicit: Option<Vec<f64>>,
    ) -> Result<Vec<f64>, CaseFileError> {
        if let Some(series) = explicit {
            if series.len() != self.periods {
                return Err(invalid(format!(
                    "{what}: explicit series has {} entries, grid has {} periods",
                    series.len(),
                    self.periods
                )));
            }
            return Ok(series);
        }
        let base = base.unwrap_or(0.0);
        match profile {
            Some(name) => {
                let shape = self.series.get(name).ok_or_else(|| {
                    invalid(format!("{what}: profile {name:?} is not in [series]"))
                })?;
                if shape.len() != self.periods {
                    return Err(invalid(format!(
                        "{what}: profile {name:?} has {} entries, grid has {} periods",
                        shape.len(),
                        self.periods
                    )));
                }
                Ok(shape.iter().map(|v| base * v).collect())
            }
            None => Ok(vec![base; self.periods]),
        }
    }
}

/// Parses a case from TOML text.
pub fn load_case(text: &str) -> Result<Case, CaseFileError> {
    let file: CaseFileRoot = toml::from_str(text).map_err(|e| CaseFileError::Toml(e.to_string()))?;
    if file.schema != SCHEMA_TAG {
        return Err(CaseFileError::Schema(file.schema));
    }
    let periods = file.grid.periods;
    let resolver = SeriesResolver {
        series: &file.series,
        periods,
    };

    let buses = file
        .eps
        .buses
        .iter()
        .map(|b| {
            let what = format!("bus {}", b.id);
            Ok(Bus {
                id: b.id,
                v_min: b.v_min.unwrap_or(0.81),
                v_max: b.v_max.unwrap_or(1.1025),
                p_load: resolver.resolve(
                    &what,
                    b.p_mw,
                    b.profile.as_ref(),
                    b.p_series.clone(),
                )?,
                q_load: resolver.resolve(
                    &what,
                    b.q_mvar,
                    b.profile.as_ref(),
                    b.q_series.clone(),
                )?,
            })
        })
        .collect::<Result<Vec<_>, CaseFileError>>()?;

    let branches = file
        .eps
        .branches
        .iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            r: b.r,
            x: b.x,
            l_max: b.l_max.unwrap_or(1.0),
        })
        .collect();

    let devices = file
        .eps
        .devices
        .iter()
        .map(|d| {
            let what = format!("device {}", d.id);
            let need = |field: Option<f64>, name: &str| {
                field.ok_or_else(|| invalid(format!("{what}: missing {name}")))
            };
            let need_node = || d.node.ok_or_else(|| invalid(format!("{what}: missing node")));
            let forecast = || -> Result<Vec<f64>, CaseFileError> {
                // An explicit series needs no nameplate; a profile (or a
                // constant forecast) is scaled by capacity_mw.
                if d.forecast_series.is_none() {
                    need(d.capacity_mw, "capacity_mw")?;
                }
                resolver.resolve(&what, d.capacity_mw, d.forecast.as_ref(), d.forecast_series.clone())
            };
            let kind = match d.kind.as_str() {
                "generator" => DeviceKind::Generator,
                "chp" => DeviceKind::Chp {
                    power_to_heat: need(d.power_to_heat, "power_to_heat")?,
                    node: need_node()?,
                },
                "heat_pump" => DeviceKind::HeatPump {
                    cop: need(d.cop, "cop")?,
                    node: need_node()?,
                },
                "pv" => DeviceKind::Pv {
                    forecast: forecast()?,
                },
                "wind" => DeviceKind::Wind {
                    forecast: forecast()?,
                    reactive_ratio: d.reactive_ratio.unwrap_or(0.0),
                },
                other => return Err(invalid(format!("{what}: unknown kind {other:?}"))),
            };
            let p_min = d.p_min.unwrap_or(0.0);
            let p_max = match kind {
                // Renewables are capped by the forecast period-wise; the box
                // cap defaults to the nameplate capacity.
                DeviceKind::Pv { .. } | DeviceKind::Wind { .. } => {
                    d.p_max.or(d.capacity_mw).unwrap_or(0.0)
                }
                _ => need(d.p_max, "p_max")?,
            };
            Ok(Device {
                id: d.id.clone(),
                bus: d.bus,
                kind,
                p_min,
                p_max,
                q_min: d.q_min.unwrap_or(0.0),
                q_max: d.q_max.unwrap_or(0.0),
                ramp: d.ramp.unwrap_or(f64::INFINITY),
                initial_p: d.initial_p.unwrap_or(0.5 * (p_min + p_max)),
                cost: d.cost.unwrap_or(0.0),
            })
        })
        .collect::<Result<Vec<_>, CaseFileError>>()?;

    let nodes = file
        .dhs
        .nodes
        .iter()
        .map(|n| {
            let what = format!("heating node {}", n.id);
            let (wants_load, wants_source) = match n.kind.as_str() {
                "junction" => (false, false),
                "load" => (true, false),
                "source" => (false, true),
                "source_load" => (true, true),
                other => return Err(invalid(format!("{what}: unknown kind {other:?}"))),
            };
            let demand = if wants_load {
                resolver.resolve(&what, n.demand_mw, n.profile.as_ref(), n.demand_series.clone())?
            } else {
                vec![0.0; periods]
            };
            let load = wants_load.then(|| LoadSide {
                m_out_min: n.m_out_min.unwrap_or(0.5),
                m_out_max: n.m_out_max.unwrap_or(40.0),
                t_out_min: n.t_out_min.unwrap_or(30.0),
                t_out_max: n.t_out_max.unwrap_or(75.0),
                hx_area: n.hx_area.unwrap_or(0.01),
                minor_loss: n.minor_loss.unwrap_or(10.0),
            });
            let source = wants_source.then(|| SourceSide {
                m_in_min: n.m_in_min.unwrap_or(0.0),
                m_in_max: n.m_in_max.unwrap_or(250.0),
                t_in_min: n.t_in_min.unwrap_or(60.0),
                t_in_max: n.t_in_max.unwrap_or(100.0),
            });
            Ok(DhsNode {
                id: n.id,
                demand,
                ts_min: n.ts_min.unwrap_or(50.0),
                ts_max: n.ts_max.unwrap_or(100.0),
                tr_min: n.tr_min.unwrap_or(25.0),
                tr_max: n.tr_max.unwrap_or(75.0),
                ps_min: n.ps_min.unwrap_or(5e4),
                ps_max: n.ps_max.unwrap_or(1.2e6),
                pr_min: n.pr_min.unwrap_or(5e4),
                pr_max: n.pr_max.unwrap_or(1.2e6),
                load,
                source,
            })
        })
        .collect::<Result<Vec<_>, CaseFileError>>()?;

    let pipes = file
        .dhs
        .pipes
        .iter()
        .map(|p| {
            let what = format!("pipe ({}, {})", p.from, p.to);
            let kind = match p.kind.as_deref().unwrap_or("friction") {
                "friction" => PipeKind::Friction,
                "valve" => PipeKind::Valve {
                    dp_max: p.dp_max.unwrap_or(1e6),
                },
                "pump" => {
                    let pump = p
                        .pump
                        .as_ref()
                        .ok_or_else(|| invalid(format!("{what}: pump pipe needs a [pump] table")))?;
                    PipeKind::Pump(PumpSpec {
                        gamma1: pump.gamma1,
                        gamma2: pump.gamma2,
                        gamma3: pump.gamma3,
                        efficiency: pump.efficiency,
                        p_max: pump.p_max,
                        bus: pump.bus,
                    })
                }
                other => return Err(invalid(format!("{what}: unknown kind {other:?}"))),
            };
            Ok(Pipe {
                from: p.from,
                to: p.to,
                length: p.length,
                diameter: p.diameter,
                roughness: p.roughness.unwrap_or(5e-4),
                reynolds: p.reynolds.unwrap_or(1e5),
                conductivity: p.conductivity.unwrap_or(1.5),
                m_min: p.m_min.unwrap_or(0.0),
                m_max: p.m_max.unwrap_or(300.0),
                ts_min: p.ts_min.unwrap_or(50.0),
                ts_max: p.ts_max.unwrap_or(100.0),
                tr_min: p.tr_min.unwrap_or(25.0),
                tr_max: p.tr_max.unwrap_or(75.0),
                t_init_supply: p.t_init_supply.unwrap_or(70.0),
                t_init_return: p.t_init_return.unwrap_or(45.0),
                kind,
            })
        })
        .collect::<Result<Vec<_>, CaseFileError>>()?;

    // Ground temperature is absolute, so a named profile is taken as-is
    // rather than scaled by a base value.
    let ground_temp = if let Some(series) = file.dhs.ground_series.clone() {
        if series.len() != periods {
            return Err(invalid(format!(
                "ground temperature: series has {} entries, grid has {periods} periods",
                series.len()
            )));
        }
        series
    } else if let Some(name) = file.dhs.ground.as_ref() {
        let series = file
            .series
            .get(name)
            .ok_or_else(|| invalid(format!("ground temperature: profile {name:?} is not in [series]")))?;
        if series.len() != periods {
            return Err(invalid(format!(
                "ground temperature: profile {name:?} has {} entries, grid has {periods} periods",
                series.len()
            )));
        }
        series.clone()
    } else {
        vec![8.0; periods]
    };

    Ok(Case {
        name: file.name,
        constants: PhysicalConstants {
            water_density: file.constants.water_density,
            specific_heat: file.constants.specific_heat,
            gravity: file.constants.gravity,
        },
        grid: TimeGrid {
            step_seconds: file.grid.step_seconds,
            periods,
        },
        eps: Eps {
            s_base_mva: file.eps.s_base_mva,
            root_bus: file.eps.root_bus,
            buses,
            branches,
            devices,
        },
        dhs: Dhs {
            nodes,
            pipes,
            ground_temp,
            constant_flow_settings: file.dhs.constant_flow_settings.clone(),
        },
    })
}

/// Reads and parses a case file from disk.
pub fn load_case_file(path: &std::path::Path) -> Result<Case, CaseFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_case(&text)
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// Serializes a case back to TOML with every series written explicitly.
/// `load_case(emit_case(c))` reproduces `c` exactly.
pub fn emit_case(case: &Case) -> String {
    let file = CaseFileRoot {
        schema: SCHEMA_TAG.to_string(),
        name: case.name.clone(),
        constants: ConstantsFile {
            water_density: case.constants.water_density,
            specific_heat: case.constants.specific_heat,
            gravity: case.constants.gravity,
        },
        grid: GridFile {
            step_seconds: case.grid.step_seconds,
            periods: case.grid.periods,
        },
        series: BTreeMap::new(),
        eps: EpsFile {
            s_base_mva: case.eps.s_base_mva,
            root_bus: case.eps.root_bus,
            buses: case
                .eps
                .buses
                .iter()
                .map(|b| BusFile {
                    id: b.id,
                    v_min: Some(b.v_min),
                    v_max: Some(b.v_max),
                    p_mw: None,
                    q_mvar: None,
                    profile: None,
                    p_series: Some(b.p_load.clone()),
                    q_series: Some(b.q_load.clone()),
                })
                .collect(),
            branches: case
                .eps
                .branches
                .iter()
                .map(|b| BranchFile {
                    from: b.from,
                    to: b.to,
                    r: b.r,
                    x: b.x,
                    l_max: Some(b.l_max),
                })
                .collect(),
            devices: case
                .eps
                .devices
                .iter()
                .map(|d| {
                    let mut out = DeviceFile {
                        id: d.id.clone(),
                        kind: String::new(),
                        bus: d.bus,
                        p_min: Some(d.p_min),
                        p_max: Some(d.p_max),
                        q_min: Some(d.q_min),
                        q_max: Some(d.q_max),
                        ramp: Some(d.ramp),
                        initial_p: Some(d.initial_p),
                        cost: Some(d.cost),
                        power_to_heat: None,
                        cop: None,
                        node: None,
                        capacity_mw: None,
                        forecast: None,
                        forecast_series: None,
                        reactive_ratio: None,
                    };
                    match &d.kind {
                        DeviceKind::Generator => out.kind = "generator".into(),
                        DeviceKind::Chp {
                            power_to_heat,
                            node,
                        } => {
                            out.kind = "chp".into();
                            out.power_to_heat = Some(*power_to_heat);
                            out.node = Some(*node);
                        }
                        DeviceKind::HeatPump { cop, node } => {
                            out.kind = "heat_pump".into();
                            out.cop = Some(*cop);
                            out.node = Some(*node);
                        }
                        DeviceKind::Pv { forecast } => {
                            out.kind = "pv".into();
                            out.forecast_series = Some(forecast.clone());
                        }
                        DeviceKind::Wind {
                            forecast,
                            reactive_ratio,
                        } => {
                            out.kind = "wind".into();
                            out.forecast_series = Some(forecast.clone());
                            out.reactive_ratio = Some(*reactive_ratio);
                        }
                    }
                    out
                })
                .collect(),
        },
        dhs: DhsFile {
            ground: None,
            ground_series: Some(case.dhs.ground_temp.clone()),
            constant_flow_settings: case.dhs.constant_flow_settings.clone(),
            nodes: case
                .dhs
                .nodes
                .iter()
                .map(|n| NodeFile {
                    id: n.id,
                    kind: match (n.is_load(), n.is_source()) {
                        (true, true) => "source_load".into(),
                        (true, false) => "load".into(),
                        (false, true) => "source".into(),
                        (false, false) => "junction".into(),
                    },
                    ts_min: Some(n.ts_min),
                    ts_max: Some(n.ts_max),
                    tr_min: Some(n.tr_min),
                    tr_max: Some(n.tr_max),
                    ps_min: Some(n.ps_min),
                    ps_max: Some(n.ps_max),
                    pr_min: Some(n.pr_min),
                    pr_max: Some(n.pr_max),
                    demand_mw: None,
                    profile: None,
                    demand_series: n.is_load().then(|| n.demand.clone()),
                    m_out_min: n.load.as_ref().map(|l| l.m_out_min),
                    m_out_max: n.load.as_ref().map(|l| l.m_out_max),
                    t_out_min: n.load.as_ref().map(|l| l.t_out_min),
                    t_out_max: n.load.as_ref().map(|l| l.t_out_max),
                    hx_area: n.load.as_ref().map(|l| l.hx_area),
                    minor_loss: n.load.as_ref().map(|l| l.minor_loss),
                    m_in_min: n.source.as_ref().map(|s| s.m_in_min),
                    m_in_max: n.source.as_ref().map(|s| s.m_in_max),
                    t_in_min: n.source.as_ref().map(|s| s.t_in_min),
                    t_in_max: n.source.as_ref().map(|s| s.t_in_max),
                })
                .collect(),
            pipes: case
                .dhs
                .pipes
                .iter()
                .map(|p| PipeFile {
                    from: p.from,
                    to: p.to,
                    length: p.length,
                    diameter: p.diameter,
                    roughness: Some(p.roughness),
                    reynolds: Some(p.reynolds),
                    conductivity: Some(p.conductivity),
                    m_min: Some(p.m_min),
                    m_max: Some(p.m_max),
                    ts_min: Some(p.ts_min),
                    ts_max: Some(p.ts_max),
                    tr_min: Some(p.tr_min),
                    tr_max: Some(p.tr_max),
                    t_init_supply: Some(p.t_init_supply),
                    t_init_return: Some(p.t_init_return),
                    kind: Some(
                        match p.kind {
                            PipeKind::Friction => "friction",
                            PipeKind::Valve { .. } => "valve",
                            PipeKind::Pump(_) => "pump",
                        }
                        .into(),
                    ),
                    dp_max: match p.kind {
                        PipeKind::Valve { dp_max } => Some(dp_max),
                        _ => None,
                    },
                    pump: match &p.kind {
                        PipeKind::Pump(s) => Some(PumpFile {
                            gamma1: s.gamma1,
                            gamma2: s.gamma2,
                            gamma3: s.gamma3,
                            efficiency: s.efficiency,
                            p_max: s.p_max,
                            bus: s.bus,
                        }),
                        _ => None,
                    },
                })
                .collect(),
        },
    };
    toml::to_string_pretty(&file).expect("case serialization is infallible")
}
