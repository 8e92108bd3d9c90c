//! Case model: the typed description of a combined electric / district-heat
//! system over a dispatch horizon.
//!
//! A [`Case`] is pure data — physical constants, the time grid, the electric
//! network with its devices, and the heating network with its pipes — plus a
//! handful of derived quantities (friction coefficients, pipe water mass)
//! computed from geometry. Everything downstream (builders, simulators,
//! drivers) reads cases and never mutates them.
//!
//! Units are natural throughout: MW / MVAr for device and demand power,
//! per-unit for electric network quantities (on the case's MVA base), kg/s
//! for mass flow, Pa for pressure, °C for temperature, seconds for time.

mod bundled;
mod schema;
mod validate;

pub use bundled::{case33_30, case5_4};
pub use schema::{emit_case, load_case, load_case_file, CaseFileError};
pub use validate::{validate_case, Severity, ValidationIssue, ValidationReport};

/// Water and gravity constants shared by the hydraulic and thermal models.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Water density ρ_w (kg/m³).
    pub water_density: f64,
    /// Specific heat of water c_w (J/(kg·K)).
    pub specific_heat: f64,
    /// Gravitational acceleration g_a (m/s²).
    pub gravity: f64,
}

impl PhysicalConstants {
    /// Conversion from meters of water head to pressure (Pa/m): ρ_w · g_a.
    pub fn head_to_pressure(&self) -> f64 {
        self.water_density * self.gravity
    }

    /// Specific heat in MW·s/(kg·K), the unit used by heat-side balances.
    pub fn specific_heat_mw(&self) -> f64 {
        self.specific_heat * 1e-6
    }
}

/// Uniform dispatch time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    /// Step length Δt in seconds.
    pub step_seconds: f64,
    /// Number of periods T (periods are indexed 0..T in code, reported
    /// 1-based).
    pub periods: usize,
}

impl TimeGrid {
    pub fn step_hours(&self) -> f64 {
        self.step_seconds / 3600.0
    }
}

// ---------------------------------------------------------------------------
// Electric network
// ---------------------------------------------------------------------------

/// An electric bus with its voltage box and demand series.
#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    /// External 1-based identifier.
    pub id: usize,
    /// Bounds on squared voltage magnitude (p.u.²).
    pub v_min: f64,
    pub v_max: f64,
    /// Active / reactive demand per period (MW / MVAr).
    pub p_load: Vec<f64>,
    pub q_load: Vec<f64>,
}

/// A distribution branch, oriented from its `from` bus toward the `to` bus
/// (away from the root in a radial feeder).
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series resistance / reactance (p.u. on the system base).
    pub r: f64,
    pub x: f64,
    /// Cap on squared current magnitude (p.u.²).
    pub l_max: f64,
}

/// What a dispatchable device is, with the couplings peculiar to its kind.
#[derive(Clone, Debug, PartialEq)]
pub enum DeviceKind {
    /// Plain dispatchable injection (grid import, gas engine, ...).
    Generator,
    /// Combined heat and power unit: heat output = `power_to_heat` × P,
    /// injected at heating-network node `node`.
    Chp { power_to_heat: f64, node: usize },
    /// Heat pump: consumes P electric, injects `cop` × P heat at `node`.
    HeatPump { cop: f64, node: usize },
    /// Photovoltaic plant: P ≤ forecast (curtailable), Q = 0.
    Pv { forecast: Vec<f64> },
    /// Wind plant: P ≤ forecast (curtailable), Q = `reactive_ratio` × P.
    Wind { forecast: Vec<f64>, reactive_ratio: f64 },
}

/// A controllable device attached to an electric bus.
#[derive(Clone, Debug, PartialEq)]
pub struct Device {
    pub id: String,
    pub bus: usize,
    pub kind: DeviceKind,
    /// Active power box (MW). Heat pumps consume: their P is a load.
    pub p_min: f64,
    pub p_max: f64,
    /// Reactive power box (MVAr).
    pub q_min: f64,
    pub q_max: f64,
    /// Ramp limit on active power (MW per hour).
    pub ramp: f64,
    /// Output in the period before the horizon, for the first ramp step.
    pub initial_p: f64,
    /// Linear cost coefficient ($ per MWh of active power).
    pub cost: f64,
}

/// The electric power side of a case.
#[derive(Clone, Debug, PartialEq)]
pub struct Eps {
    /// MVA base for the per-unit system.
    pub s_base_mva: f64,
    /// Root (substation) bus; its squared voltage is pinned by its box.
    pub root_bus: usize,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub devices: Vec<Device>,
}

// ---------------------------------------------------------------------------
// District heating network
// ---------------------------------------------------------------------------

/// Heat-exchanger (consumer) attributes of a node.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadSide {
    /// Outflow box through the exchanger (kg/s).
    pub m_out_min: f64,
    pub m_out_max: f64,
    /// Box on the return temperature leaving the exchanger (°C).
    pub t_out_min: f64,
    pub t_out_max: f64,
    /// Exchanger cross-sectional area (m²), for the minor pressure loss.
    pub hx_area: f64,
    /// Minor loss coefficient f^m (dimensionless).
    pub minor_loss: f64,
}

impl LoadSide {
    /// Minor-loss coefficient (Pa/(kg/s)²) of the heat exchanger:
    /// f^m · c_Pa / (2 g_a ρ_w² A²).
    pub fn minor_coefficient(&self, k: &PhysicalConstants) -> f64 {
        self.minor_loss * k.head_to_pressure()
            / (2.0 * k.gravity * k.water_density.powi(2) * self.hx_area.powi(2))
    }
}

/// Heat-injection (producer) attributes of a node.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSide {
    /// Injection flow box (kg/s).
    pub m_in_min: f64,
    pub m_in_max: f64,
    /// Box on the injection temperature into the supply network (°C).
    pub t_in_min: f64,
    pub t_in_max: f64,
}

/// A heating-network node. Junctions have neither side; a node may in
/// principle carry both a load and a source.
#[derive(Clone, Debug, PartialEq)]
pub struct DhsNode {
    /// External 1-based identifier.
    pub id: usize,
    /// Heat demand per period (MW); all zeros for non-loads.
    pub demand: Vec<f64>,
    /// Nodal temperature boxes, supply and return networks (°C).
    pub ts_min: f64,
    pub ts_max: f64,
    pub tr_min: f64,
    pub tr_max: f64,
    /// Nodal pressure boxes, supply and return networks (Pa).
    pub ps_min: f64,
    pub ps_max: f64,
    pub pr_min: f64,
    pub pr_max: f64,
    pub load: Option<LoadSide>,
    pub source: Option<SourceSide>,
}

impl DhsNode {
    pub fn is_load(&self) -> bool {
        self.load.is_some()
    }

    pub fn is_source(&self) -> bool {
        self.source.is_some()
    }
}

/// Hydraulic element installed on a pipe.
#[derive(Clone, Debug, PartialEq)]
pub enum PipeKind {
    /// Plain pipe: symmetric major friction losses apply.
    Friction,
    /// Pressure-reducing valve on the supply side; lossless return side.
    Valve {
        /// Cap on the valve pressure drop (Pa).
        dp_max: f64,
    },
    /// Circulation pump on the supply side; lossless return side.
    Pump(PumpSpec),
}

/// Variable-speed pump data: the convex operating region is
/// `Δp ≤ c_Pa·γ¹ − c_Pa·γ²·(m/ρ_w)²` with `Δp ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpSpec {
    /// Shutoff head at full speed (m).
    pub gamma1: f64,
    /// Head-vs-flow curvature (m·s²/m⁶ against volumetric flow).
    pub gamma2: f64,
    /// Flow exponent of the characteristic curve (≈ 2; the convex region
    /// uses exactly 2).
    pub gamma3: f64,
    /// Wire-to-water efficiency.
    pub efficiency: f64,
    /// Electric power cap (MW).
    pub p_max: f64,
    /// Electric bus that carries the pump's consumption.
    pub bus: usize,
}

/// A heating pipe, oriented `from → to` in the supply network; the return
/// network mirrors it with reversed flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Pipe {
    pub from: usize,
    pub to: usize,
    /// Geometry: length (m), inner diameter (m), wall roughness ε (m).
    pub length: f64,
    pub diameter: f64,
    pub roughness: f64,
    /// Design Reynolds number used in the friction factor.
    pub reynolds: f64,
    /// Heat transfer coefficient λ to the ground (W/(m·K)).
    pub conductivity: f64,
    /// Mass flow box (kg/s); one flow variable serves both networks.
    pub m_min: f64,
    pub m_max: f64,
    /// Water temperature boxes inside the pipe, per network (°C).
    pub ts_min: f64,
    pub ts_max: f64,
    pub tr_min: f64,
    pub tr_max: f64,
    /// Average water temperature per network before the horizon (°C).
    pub t_init_supply: f64,
    pub t_init_return: f64,
    pub kind: PipeKind,
}

impl Pipe {
    /// Flow cross-section area (m²).
    pub fn cross_section(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter / 4.0
    }

    /// Total mass of water in the pipe (kg): M = π L D² ρ_w / 4.
    pub fn water_mass(&self, k: &PhysicalConstants) -> f64 {
        self.cross_section() * self.length * k.water_density
    }

    /// Darcy friction factor from roughness and the design Reynolds number:
    /// f^D = 1.325 / ln(ε/(3.7 D) + 5.74/Re^0.9)².
    pub fn friction_factor(&self) -> f64 {
        let arg = self.roughness / (3.7 * self.diameter) + 5.74 / self.reynolds.powf(0.9);
        1.325 / arg.ln().powi(2)
    }

    /// Major-loss coefficient μ (Pa/(kg/s)²):
    /// μ = f^D · c_Pa · 8 L / (D⁵ ρ_w² π² g_a).
    pub fn friction_coefficient(&self, k: &PhysicalConstants) -> f64 {
        self.friction_factor() * k.head_to_pressure() * 8.0 * self.length
            / (self.diameter.powi(5)
                * k.water_density.powi(2)
                * std::f64::consts::PI.powi(2)
                * k.gravity)
    }
}

/// The district heating side of a case.
#[derive(Clone, Debug, PartialEq)]
pub struct Dhs {
    pub nodes: Vec<DhsNode>,
    pub pipes: Vec<Pipe>,
    /// Ground temperature per period (°C).
    pub ground_temp: Vec<f64>,
    /// Bundled total-flow settings for constant-flow benchmarking (kg/s),
    /// conventionally high → low.
    pub constant_flow_settings: Vec<f64>,
}

/// A complete dispatch case.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub name: String,
    pub constants: PhysicalConstants,
    pub grid: TimeGrid,
    pub eps: Eps,
    pub dhs: Dhs,
}

impl Case {
    /// Position of a bus id in `eps.buses`.
    pub fn bus_pos(&self, id: usize) -> Option<usize> {
        self.eps.buses.iter().position(|b| b.id == id)
    }

    /// Position of a heating node id in `dhs.nodes`.
    pub fn node_pos(&self, id: usize) -> Option<usize> {
        self.dhs.nodes.iter().position(|n| n.id == id)
    }

    /// The main source node: lowest-id node hosting a CHP, else the
    /// lowest-id source node. Its return pressure anchors the otherwise
    /// translation-invariant pressure system.
    pub fn main_source_node(&self) -> Option<usize> {
        let mut chp_nodes: Vec<usize> = self
            .eps
            .devices
            .iter()
            .filter_map(|d| match d.kind {
                DeviceKind::Chp { node, .. } => Some(node),
                _ => None,
            })
            .collect();
        chp_nodes.sort_unstable();
        if let Some(&n) = chp_nodes.first() {
            return Some(n);
        }
        self.dhs
            .nodes
            .iter()
            .filter(|n| n.is_source())
            .map(|n| n.id)
            .min()
    }

    /// Total electric / heat demand per period (MW).
    pub fn total_electric_demand(&self) -> Vec<f64> {
        let mut tot = vec![0.0; self.grid.periods];
        for b in &self.eps.buses {
            for (t, v) in b.p_load.iter().enumerate() {
                tot[t] += v;
            }
        }
        tot
    }

    pub fn total_heat_demand(&self) -> Vec<f64> {
        let mut tot = vec![0.0; self.grid.periods];
        for n in &self.dhs.nodes {
            for (t, v) in n.demand.iter().enumerate() {
                tot[t] += v;
            }
        }
        tot
    }
}
