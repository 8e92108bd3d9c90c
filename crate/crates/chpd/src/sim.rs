//! Single-pipe thermal simulators for the heating network.
//!
//! Two models of the outlet temperature of one pipe driven by an inlet
//! temperature series and a mass-flow series:
//!
//! * [`simulate_node_method`] tracks water parcels through the pipe with
//!   flow-dependent arrival/departure delays and an exponential heat loss
//!   toward the ground temperature. It is the accuracy reference: faithful,
//!   but built from cumulative-mass searches that do not fit in a convex
//!   program, so it never appears inside the optimization model.
//! * [`simulate_std`] steps the simplified thermal dynamic model: a
//!   first-order upwind discretization of the advection/loss balance written
//!   on the pipe-average temperature. The dispatch model embeds exactly this
//!   per-step relation as constraints, so the simulator doubles as its
//!   reference implementation.
//!
//! Both simulators are pure functions of their inputs; callers may run them
//! for many pipes in parallel.
//!
//! # Pre-horizon history
//!
//! The parcel model looks back past the first period. That history is
//! synthesized by padding: before period 0 the pipe is assumed to sit in a
//! steady regime carrying the first period's flow at the first period's
//! inlet temperature.

use crate::case::{PhysicalConstants, Pipe, TimeGrid};
use std::fmt;

/// Errors from the pipe simulators.
#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    /// An input series does not match the time grid.
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// The parcel model needs strictly positive flow to move water.
    NonpositiveFlow { period: usize, value: f64 },
    /// The upwind model accepts stagnant flow but not reversed flow.
    NegativeFlow { period: usize, value: f64 },
    /// The delay search exceeded the bound implied by the smallest flow.
    InsufficientHistory { period: usize },
    /// The linear solve for the outlet temperature lost its positive pivot.
    DegeneratePivot { period: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::LengthMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what} series has {got} entries, expected {expected}"),
            SimError::NonpositiveFlow { period, value } => write!(
                f,
                "flow must be strictly positive for the parcel model, got {value} in period {period}"
            ),
            SimError::NegativeFlow { period, value } => {
                write!(f, "flow must be nonnegative, got {value} in period {period}")
            }
            SimError::InsufficientHistory { period } => write!(
                f,
                "delay search for period {period} ran past the available history"
            ),
            SimError::DegeneratePivot { period } => write!(
                f,
                "outlet-temperature solve has a nonpositive pivot in period {period}"
            ),
        }
    }
}

impl std::error::Error for SimError {}

/// Delay bookkeeping of the parcel model for one pipe and one period.
///
/// `t_arrive` is the arriving delay: the parcel reaching the outlet during
/// the current period entered the pipe `t_arrive` steps ago. `t_leave` is
/// the leaving delay of the oldest water that is still (partly) inside the
/// pipe at the start of the period. Cumulative inflow masses over the two
/// windows and the temperature-weighted mass of the parcels strictly between
/// them complete the data needed for the outlet-temperature average.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMethodState {
    /// Arriving delay t^st (steps).
    pub t_arrive: usize,
    /// Leaving delay t^ed (steps); always ≥ `t_arrive`.
    pub t_leave: usize,
    /// Cumulative inflow mass (kg) over τ ∈ [t − t_arrive, t].
    pub mass_arrive: f64,
    /// Cumulative inflow mass (kg) over τ ∈ [t − t_leave + 1, t]; equals
    /// `mass_arrive` when the two delays coincide.
    pub mass_leave: f64,
    /// Inlet-temperature-weighted mass (kg·°C) of the parcels that entered
    /// strictly between the two delay instants.
    pub interior_mass_temp: f64,
}

fn check_len(what: &'static str, series: &[f64], grid: &TimeGrid) -> Result<(), SimError> {
    if series.len() != grid.periods {
        return Err(SimError::LengthMismatch {
            what,
            expected: grid.periods,
            got: series.len(),
        });
    }
    Ok(())
}

/// Computes the per-period delay states of the parcel model.
///
/// For each period `t` the arriving delay is the smallest ζ ≥ 0 such that
/// the inflow mass accumulated over τ ∈ [t − ζ, t] exceeds the water mass
/// held by the pipe, and the leaving delay is the smallest ζ such that the
/// same sum also exceeds the pipe mass plus the current period's inflow.
/// History before period 0 is padded as described in the module docs.
pub fn node_method_states(
    pipe: &Pipe,
    constants: &PhysicalConstants,
    grid: &TimeGrid,
    inlet: &[f64],
    flow: &[f64],
) -> Result<Vec<NodeMethodState>, SimError> {
    check_len("inlet", inlet, grid)?;
    check_len("flow", flow, grid)?;
    for (t, &m) in flow.iter().enumerate() {
        if !(m > 0.0) {
            return Err(SimError::NonpositiveFlow { period: t, value: m });
        }
    }
    let dt = grid.step_seconds;
    let mass = pipe.water_mass(constants);
    let m_at = |tau: isize| if tau < 0 { flow[0] } else { flow[tau as usize] };
    let t_in = |tau: isize| if tau < 0 { inlet[0] } else { inlet[tau as usize] };
    let min_flow = flow.iter().copied().fold(f64::INFINITY, f64::min);

    let mut states = Vec::with_capacity(grid.periods);
    for t in 0..grid.periods {
        let ti = t as isize;
        let mdt = flow[t] * dt;
        // Every flow in the (padded) history is at least `min_flow`, so the
        // cumulative sum must exceed mass + mdt within this many steps.
        let cap = ((mass + mdt) / (min_flow * dt)).ceil() as usize + 2;
        let mut acc = 0.0;
        let mut arrive: Option<(usize, f64)> = None;
        let mut leave: Option<(usize, f64)> = None;
        let mut zeta = 0usize;
        while leave.is_none() {
            if zeta > cap {
                return Err(SimError::InsufficientHistory { period: t });
            }
            let step_mass = m_at(ti - zeta as isize) * dt;
            acc += step_mass;
            if arrive.is_none() && acc > mass {
                arrive = Some((zeta, acc));
            }
            if acc > mass + mdt {
                // The window for the leaving mass starts one step later
                // than the search window, so the oldest term drops out.
                leave = Some((zeta, acc - step_mass));
            }
            zeta += 1;
        }
        let (t_arrive, mass_arrive) = arrive.expect("arriving delay found before leaving delay");
        let (t_leave, leave_acc) = leave.expect("loop exits only once the leaving delay is set");
        let mass_leave = if t_leave > t_arrive { leave_acc } else { mass_arrive };
        let interior_mass_temp: f64 = ((t_arrive + 1)..t_leave)
            .map(|z| {
                let tau = ti - z as isize;
                m_at(tau) * dt * t_in(tau)
            })
            .sum();
        states.push(NodeMethodState {
            t_arrive,
            t_leave,
            mass_arrive,
            mass_leave,
            interior_mass_temp,
        });
    }
    Ok(states)
}

/// Simulates the outlet temperature of one pipe with the parcel-tracking
/// model (flow-dependent time delays plus exponential heat loss).
///
/// The loss-free outlet temperature of period `t` is the mass-weighted
/// average of the inlet temperatures of the parcels leaving during that
/// period: the partially-arrived oldest parcel, the fully passing interior
/// parcels, and the partially-leaving newest one. Heat exchange with the
/// ground then pulls it toward `ground[t]` with an exponential factor whose
/// exponent scales with the residence time t^st + 1/2 + (M^ed − M^st)/(m Δt).
///
/// `inlet`, `flow` and `ground` must all have one entry per grid period and
/// every flow must be strictly positive.
pub fn simulate_node_method(
    pipe: &Pipe,
    constants: &PhysicalConstants,
    grid: &TimeGrid,
    inlet: &[f64],
    flow: &[f64],
    ground: &[f64],
) -> Result<Vec<f64>, SimError> {
    check_len("ground", ground, grid)?;
    let states = node_method_states(pipe, constants, grid, inlet, flow)?;
    let dt = grid.step_seconds;
    let mass = pipe.water_mass(constants);
    let area = pipe.cross_section();
    let m_at = |tau: isize| if tau < 0 { flow[0] } else { flow[tau as usize] };
    let t_in = |tau: isize| if tau < 0 { inlet[0] } else { inlet[tau as usize] };

    let mut out = Vec::with_capacity(grid.periods);
    for (t, s) in states.iter().enumerate() {
        let ti = t as isize;
        let mdt = flow[t] * dt;
        let loss_free = ((s.mass_arrive - mass) * t_in(ti - s.t_arrive as isize)
            + s.interior_mass_temp
            + (mdt + mass - s.mass_leave) * t_in(ti - s.t_leave as isize))
            / mdt;
        let residence = s.t_arrive as f64
            + 0.5
            + (s.mass_leave - s.mass_arrive) / (m_at(ti - s.t_arrive as isize) * dt);
        let decay = pipe.conductivity * dt
            / (area * constants.water_density * constants.specific_heat)
            * residence;
        out.push(ground[t] + (loss_free - ground[t]) * (-decay).exp());
    }
    Ok(out)
}

/// Simulates the outlet temperature of one pipe with the simplified thermal
/// dynamic model.
///
/// Each period solves the first-order upwind balance
///
/// ```text
/// (T̄_t − T̄_{t−1})/Δt + m/(A ρ_w) · (T_out − T_in)/L
///                      + λ/(A ρ_w c_w) · (T̄_t − T_ground) = 0
/// ```
///
/// with the average-temperature identity T̄ = (T_in + T_out)/2, for the one
/// unknown `T_out`. `t_init` is the pipe-average temperature before the
/// first period. Stagnant flow is allowed (the pipe then only stores and
/// leaks heat); reversed flow is not.
pub fn simulate_std(
    pipe: &Pipe,
    constants: &PhysicalConstants,
    grid: &TimeGrid,
    inlet: &[f64],
    flow: &[f64],
    ground: &[f64],
    t_init: f64,
) -> Result<Vec<f64>, SimError> {
    check_len("inlet", inlet, grid)?;
    check_len("flow", flow, grid)?;
    check_len("ground", ground, grid)?;
    let dt = grid.step_seconds;
    let area = pipe.cross_section();
    let rho = constants.water_density;
    let rate = 1.0 / dt;
    let loss = pipe.conductivity / (area * rho * constants.specific_heat);

    let mut avg_prev = t_init;
    let mut out = Vec::with_capacity(grid.periods);
    for t in 0..grid.periods {
        let m = flow[t];
        if !(m >= 0.0) {
            return Err(SimError::NegativeFlow { period: t, value: m });
        }
        let adv = m / (area * rho * pipe.length);
        let pivot = 0.5 * rate + adv + 0.5 * loss;
        if !(pivot > 0.0) {
            return Err(SimError::DegeneratePivot { period: t });
        }
        let t_out =
            (rate * avg_prev + loss * ground[t] + (adv - 0.5 * rate - 0.5 * loss) * inlet[t])
                / pivot;
        avg_prev = 0.5 * (inlet[t] + t_out);
        out.push(t_out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::PipeKind;

    fn constants(rho: f64, c: f64) -> PhysicalConstants {
        PhysicalConstants {
            water_density: rho,
            specific_heat: c,
            gravity: 9.81,
        }
    }

    fn pipe(length: f64, diameter: f64, conductivity: f64) -> Pipe {
        Pipe {
            from: 1,
            to: 2,
            length,
            diameter,
            roughness: 5e-4,
            reynolds: 1e5,
            conductivity,
            m_min: 0.0,
            m_max: 1e3,
            ts_min: 0.0,
            ts_max: 200.0,
            tr_min: 0.0,
            tr_max: 200.0,
            t_init_supply: 70.0,
            t_init_return: 45.0,
            kind: PipeKind::Friction,
        }
    }

    fn grid(dt: f64, periods: usize) -> TimeGrid {
        TimeGrid {
            step_seconds: dt,
            periods,
        }
    }

    /// Unit-area pipe: D = 2/√π makes the cross-section exactly 1 m².
    fn unit_area_diameter() -> f64 {
        2.0 / std::f64::consts::PI.sqrt()
    }

    // Deterministic pseudo-random stream for property tests.
    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn delay_window_matches_hand_enumeration() {
        // Pipe holding exactly 10 kg (A = 1 m², L = 10 m, ρ = 1 kg/m³),
        // constant flow 4 kg/s, Δt = 1 s. Cumulative inflow 4, 8, 12 first
        // exceeds 10 at ζ = 2, and first exceeds 10 + 4 at ζ = 3.
        let k = constants(1.0, 4182.0);
        let p = pipe(10.0, unit_area_diameter(), 0.0);
        let g = grid(1.0, 6);
        let inlet = vec![80.0; 6];
        let flow = vec![4.0; 6];
        let states = node_method_states(&p, &k, &g, &inlet, &flow).unwrap();
        for s in &states {
            assert_eq!(s.t_arrive, 2);
            assert_eq!(s.t_leave, 3);
            assert!((s.mass_arrive - 12.0).abs() < 1e-12);
            assert!((s.mass_leave - 12.0).abs() < 1e-12);
            assert_eq!(s.interior_mass_temp, 0.0);
        }
    }

    #[test]
    fn delays_satisfy_minimality_and_mass_conservation() {
        // Brute-force check of the defining cumulative-sum inequalities and
        // of the convex-combination identity behind the loss-free average:
        // the three parcel weights must add up to the period's inflow mass.
        let k = constants(1.0, 4182.0);
        let p = pipe(7.3, unit_area_diameter(), 0.0); // holds 7.3 kg
        let g = grid(0.8, 40);
        let mut seed = 42u64;
        let flow: Vec<f64> = (0..40).map(|_| 0.5 + 4.5 * splitmix(&mut seed)).collect();
        let inlet: Vec<f64> = (0..40).map(|_| 40.0 + 60.0 * splitmix(&mut seed)).collect();
        let states = node_method_states(&p, &k, &g, &inlet, &flow).unwrap();
        let mass = p.water_mass(&k);
        let m_at = |tau: isize| if tau < 0 { flow[0] } else { flow[tau as usize] };
        let cum = |t: isize, zeta: usize| -> f64 {
            (0..=zeta).map(|z| m_at(t - z as isize) * 0.8).sum()
        };
        for (t, s) in states.iter().enumerate() {
            let ti = t as isize;
            let mdt = flow[t] * 0.8;
            assert!(s.t_arrive <= s.t_leave);
            // Minimality of the arriving delay.
            assert!(cum(ti, s.t_arrive) > mass);
            if s.t_arrive > 0 {
                assert!(cum(ti, s.t_arrive - 1) <= mass);
            }
            // Minimality of the leaving delay.
            assert!(cum(ti, s.t_leave) > mass + mdt);
            if s.t_leave > 0 {
                assert!(cum(ti, s.t_leave - 1) <= mass + mdt);
            }
            // Stored masses match their windows.
            assert!((s.mass_arrive - cum(ti, s.t_arrive)).abs() < 1e-9);
            let expect_leave = if s.t_leave > s.t_arrive {
                cum(ti, s.t_leave) - m_at(ti - s.t_leave as isize) * 0.8
            } else {
                s.mass_arrive
            };
            assert!((s.mass_leave - expect_leave).abs() < 1e-9);
            // Parcel weights form a partition of the inflow mass m·Δt.
            let interior_mass: f64 = ((s.t_arrive + 1)..s.t_leave)
                .map(|z| m_at(ti - z as isize) * 0.8)
                .sum();
            let total = (s.mass_arrive - mass) + interior_mass + (mdt + mass - s.mass_leave);
            assert!((total - mdt).abs() < 1e-9, "period {t}: {total} vs {mdt}");
            assert!(s.mass_arrive - mass > 0.0);
            // When the delays differ, the newest-parcel weight is kept
            // nonnegative by the leaving delay's minimality. When they
            // coincide, both weights multiply the same inlet temperature
            // and their sum (= m·Δt) is what matters.
            if s.t_leave > s.t_arrive {
                assert!(mdt + mass - s.mass_leave >= -1e-12);
            }
        }
    }

    #[test]
    fn zero_conductivity_constant_inlet_is_pure_delay() {
        let k = constants(1000.0, 4182.0);
        let p = pipe(200.0, 0.3, 0.0);
        let g = grid(300.0, 24);
        let inlet = vec![85.0; 24];
        let flow = vec![12.0; 24];
        let ground = vec![8.0; 24];
        let out = simulate_node_method(&p, &k, &g, &inlet, &flow, &ground).unwrap();
        for v in out {
            assert!((v - 85.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_flow_attenuation_matches_closed_form() {
        // A = 1 m², ρ = 1, c = 500, λ = 2, Δt = 100 s → λΔt/(Aρc) = 0.4.
        // Flow 4 kg/s moves 400 kg per step past a 10 kg pipe: the arriving
        // delay is 0, the leaving delay 1, and both window masses equal 400,
        // so the exponent is −0.4·(0 + 1/2) = −0.2 with no loss-free mixing.
        let k = constants(1.0, 500.0);
        let p = pipe(10.0, unit_area_diameter(), 2.0);
        let g = grid(100.0, 5);
        let inlet = vec![80.0; 5];
        let flow = vec![4.0; 5];
        let ground = vec![0.0; 5];
        let out = simulate_node_method(&p, &k, &g, &inlet, &flow, &ground).unwrap();
        let expect = 80.0 * (-0.2f64).exp();
        for v in out {
            assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        }
    }

    #[test]
    fn step_response_is_delayed_weighted_average() {
        // M = 10, m ≡ 4, Δt = 1: parcels leaving in period t entered at
        // t−2 (weight 2 kg) and t−3 (weight 2 kg), so the loss-free outlet
        // is (T_in(t−2) + T_in(t−3))/2 and a 20→60 inlet step at period 3
        // surfaces as 20 → 40 (half-mixed) → 60 over periods 4–6.
        let k = constants(1.0, 4182.0);
        let p = pipe(10.0, unit_area_diameter(), 0.0);
        let g = grid(1.0, 8);
        let mut inlet = vec![20.0; 8];
        for v in inlet.iter_mut().skip(3) {
            *v = 60.0;
        }
        let flow = vec![4.0; 8];
        let ground = vec![0.0; 8];
        let out = simulate_node_method(&p, &k, &g, &inlet, &flow, &ground).unwrap();
        let expect = [20.0, 20.0, 20.0, 20.0, 20.0, 40.0, 60.0, 60.0];
        for (t, (&got, &want)) in out.iter().zip(expect.iter()).enumerate() {
            assert!((got - want).abs() < 1e-12, "period {t}: {got} vs {want}");
        }
    }

    #[test]
    fn nonpositive_flow_and_length_mismatch_are_rejected() {
        let k = constants(1000.0, 4182.0);
        let p = pipe(100.0, 0.2, 1.5);
        let g = grid(900.0, 4);
        let inlet = vec![70.0; 4];
        let ground = vec![8.0; 4];
        let bad_flow = vec![5.0, 0.0, 5.0, 5.0];
        let err = simulate_node_method(&p, &k, &g, &inlet, &bad_flow, &ground).unwrap_err();
        assert_eq!(
            err,
            SimError::NonpositiveFlow {
                period: 1,
                value: 0.0
            }
        );
        let err = simulate_node_method(&p, &k, &g, &inlet[..3], &[5.0; 4], &ground).unwrap_err();
        assert!(matches!(err, SimError::LengthMismatch { what: "inlet", .. }));
        let err = simulate_std(&p, &k, &g, &inlet, &[5.0; 4], &ground[..2], 70.0).unwrap_err();
        assert!(matches!(err, SimError::LengthMismatch { what: "ground", .. }));
        let err = simulate_std(&p, &k, &g, &inlet, &[5.0, -1.0, 5.0, 5.0], &ground, 70.0)
            .unwrap_err();
        assert_eq!(
            err,
            SimError::NegativeFlow {
                period: 1,
                value: -1.0
            }
        );
    }

    #[test]
    fn std_zero_loss_steady_state_is_identity() {
        let k = constants(1000.0, 4182.0);
        let p = pipe(500.0, 0.25, 0.0);
        let g = grid(900.0, 20);
        let inlet = vec![90.0; 20];
        let flow = vec![40.0; 20];
        let ground = vec![8.0; 20];
        let out = simulate_std(&p, &k, &g, &inlet, &flow, &ground, 90.0).unwrap();
        for v in out {
            assert!((v - 90.0).abs() < 1e-12);
        }
    }

    #[test]
    fn std_steady_state_matches_closed_form() {
        // Steady balance: m c (T_out − T_in) + λ L (T̄ − T_ground) = 0.
        // With K = m c/(λ L) and T_ground = 0 it solves to
        // T_out = (K − 1/2)·T_in/(K + 1/2); K = 10, T_in = 100 → 9.5/10.5·100.
        let c = 4182.0;
        let m = 1.0;
        let lambda = 1.0;
        let length = m * c / (lambda * 10.0); // K = 10
        let k = constants(1000.0, c);
        let p = pipe(length, 0.2, lambda);
        let g = grid(3600.0, 40);
        let t_in = 100.0;
        let expect = (10.0 - 0.5) * t_in / (10.0 + 0.5);
        let inlet = vec![t_in; 40];
        let flow = vec![m; 40];
        let ground = vec![0.0; 40];

        // Started on the steady average, the solve reproduces the steady
        // outlet from the very first period.
        let steady_avg = 0.5 * (t_in + expect);
        let out = simulate_std(&p, &k, &g, &inlet, &flow, &ground, steady_avg).unwrap();
        for v in &out {
            assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        }

        // Started hot, the transient decays toward the same steady outlet.
        let g_long = grid(3600.0, 400);
        let out = simulate_std(
            &p,
            &k,
            &g_long,
            &vec![t_in; 400],
            &vec![m; 400],
            &vec![0.0; 400],
            t_in,
        )
        .unwrap();
        assert!((out[399] - expect).abs() < 1e-6);
    }

    #[test]
    fn std_respects_maximum_principle_under_fast_flow() {
        // When the inflow parcel per step covers at least half the pipe
        // volume (plus the loss term), the outlet solve is a convex
        // combination of the previous average, the inlet, and the ground
        // temperature, so no output can exceed the hottest input.
        let k = constants(1.0, 500.0);
        let p = pipe(10.0, unit_area_diameter(), 0.2); // AρL = 10 kg
        let g = grid(1.0, 200);
        let mut seed = 7u64;
        let inlet: Vec<f64> = (0..200).map(|_| 40.0 + 60.0 * splitmix(&mut seed)).collect();
        // adv = m/10 must dominate 1/(2Δt) + loss/2 ≈ 0.5002; m ≥ 5.1 does.
        let flow: Vec<f64> = (0..200).map(|_| 5.1 + 3.9 * splitmix(&mut seed)).collect();
        let ground = vec![5.0; 200];
        let t_init = 75.0;
        let out = simulate_std(&p, &k, &g, &inlet, &flow, &ground, t_init).unwrap();
        let hottest = inlet
            .iter()
            .copied()
            .fold(t_init, f64::max);
        for (t, v) in out.iter().enumerate() {
            assert!(*v <= hottest + 1e-9, "period {t}: {v} > {hottest}");
            assert!(*v >= 5.0 - 1e-9, "period {t}: {v} below ground");
        }
    }

    #[test]
    fn std_stagnant_flow_stores_heat() {
        // With zero flow and zero loss the pipe-average temperature is
        // conserved exactly; the outlet mirrors the inlet around it.
        let k = constants(1000.0, 4182.0);
        let p = pipe(300.0, 0.2, 0.0);
        let g = grid(900.0, 3);
        let inlet = vec![60.0, 62.0, 58.0];
        let flow = vec![0.0; 3];
        let ground = vec![8.0; 3];
        let out = simulate_std(&p, &k, &g, &inlet, &flow, &ground, 70.0).unwrap();
        let mut avg = 70.0;
        for (t, v) in out.iter().enumerate() {
            assert!((0.5 * (inlet[t] + v) - avg).abs() < 1e-12);
            avg = 0.5 * (inlet[t] + v);
        }
    }
}
