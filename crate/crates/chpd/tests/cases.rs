//! Integration tests for the bundled cases and the case file layer.

use chpd::case::{
    case33_30, case5_4, emit_case, load_case, validate_case, DeviceKind, PipeKind,
};

fn peak(series: &[f64]) -> f64 {
    series.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn case33_30_has_the_published_dimensions() {
    let case = case33_30();
    assert_eq!(case.eps.buses.len(), 33);
    assert_eq!(case.eps.branches.len(), 32);
    assert_eq!(case.dhs.nodes.len(), 30);
    assert_eq!(case.dhs.pipes.len(), 29);
    assert_eq!(case.dhs.nodes.iter().filter(|n| n.is_load()).count(), 17);
    assert_eq!(case.dhs.nodes.iter().filter(|n| n.is_source()).count(), 2);
    assert_eq!(case.grid.periods, 24);

    let total_length: f64 = case.dhs.pipes.iter().map(|p| p.length).sum();
    assert!((total_length - 6600.0).abs() < 1e-9, "total {total_length} m");
}

#[test]
fn case33_30_peak_loads_match_the_headline_figures() {
    let case = case33_30();
    let electric = peak(&case.total_electric_demand());
    let heat = peak(&case.total_heat_demand());
    assert!((electric - 3.72).abs() <= 0.01, "electric peak {electric} MW");
    assert!((heat - 11.44).abs() <= 1e-9, "heat peak {heat} MW");
}

#[test]
fn case5_4_peak_loads() {
    let case = case5_4();
    let electric = peak(&case.total_electric_demand());
    let heat = peak(&case.total_heat_demand());
    assert!((electric - 1.55).abs() <= 1e-9, "electric peak {electric} MW");
    assert!((heat - 2.46).abs() <= 1e-9, "heat peak {heat} MW");
}

#[test]
fn bundled_cases_validate_cleanly() {
    for case in [case33_30(), case5_4()] {
        let report = validate_case(&case);
        assert!(report.is_clean(), "{}:\n{report}", case.name);
    }
}

#[test]
fn bundled_cases_round_trip_through_emission() {
    for case in [case33_30(), case5_4()] {
        let text = emit_case(&case);
        let reloaded = load_case(&text).expect("emitted case parses");
        assert_eq!(case, reloaded, "{} round trip", case.name);
    }
}

#[test]
fn main_source_is_the_cogeneration_node() {
    assert_eq!(case33_30().main_source_node(), Some(1));
    assert_eq!(case5_4().main_source_node(), Some(1));
}

#[test]
fn device_roster_matches_the_system_diagram() {
    let case = case33_30();
    let kind_of = |id: &str| {
        case.eps
            .devices
            .iter()
            .find(|d| d.id == id)
            .unwrap_or_else(|| panic!("device {id} present"))
            .kind
            .clone()
    };
    assert!(matches!(kind_of("import"), DeviceKind::Generator));
    assert!(matches!(kind_of("gas"), DeviceKind::Generator));
    assert!(matches!(kind_of("chp"), DeviceKind::Chp { node: 1, .. }));
    assert!(matches!(kind_of("hp"), DeviceKind::HeatPump { node: 29, .. }));
    assert!(matches!(kind_of("pv"), DeviceKind::Pv { .. }));
    assert!(matches!(kind_of("wt"), DeviceKind::Wind { .. }));
}

#[test]
fn header_pipe_holds_the_expected_water_mass() {
    // Pipe (1, 2): 600 m of 0.5 m bore — a cylinder of water.
    let case = case33_30();
    let pipe = case
        .dhs
        .pipes
        .iter()
        .find(|p| p.from == 1 && p.to == 2)
        .expect("header pipe present");
    let mass = pipe.water_mass(&case.constants);
    let expected = std::f64::consts::PI * 600.0 * 0.5 * 0.5 * 1000.0 / 4.0;
    assert!((mass - expected).abs() < 1e-6);
    assert!((expected - 117_809.7245).abs() < 1e-3);
}

#[test]
fn pump_and_valve_pipes_are_tagged() {
    let case = case33_30();
    let kind_of = |from: usize, to: usize| {
        case.dhs
            .pipes
            .iter()
            .find(|p| p.from == from && p.to == to)
            .expect("pipe present")
            .kind
            .clone()
    };
    assert!(matches!(kind_of(1, 2), PipeKind::Pump(ref s) if s.bus == 6));
    assert!(matches!(kind_of(29, 2), PipeKind::Pump(ref s) if s.bus == 19));
    assert!(matches!(kind_of(19, 20), PipeKind::Valve { .. }));
    let frictions = case
        .dhs
        .pipes
        .iter()
        .filter(|p| matches!(p.kind, PipeKind::Friction))
        .count();
    assert_eq!(frictions, 26);
}

#[test]
fn constant_flow_settings_are_ordered_high_to_low() {
    for case in [case33_30(), case5_4()] {
        let settings = &case.dhs.constant_flow_settings;
        assert!(settings.len() >= 2, "{}", case.name);
        assert!(
            settings.windows(2).all(|w| w[0] > w[1]),
            "{}: {settings:?}",
            case.name
        );
    }
}

// --- file-layer errors ----------------------------------------------------

const MINIMAL: &str = r#"
schema = "chpd-case-v1"
name = "tiny"

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

[[eps.bus]]
id = 1

[[eps.bus]]
id = 2
p_series = [0.1, 0.2]

[[eps.branch]]
from = 1
to = 2
r = 0.01
x = 0.01

[[eps.device]]
id = "g"
kind = "chp"
bus = 1
p_max = 1.0
power_to_heat = 1.2
node = 1

[dhs]

[[dhs.node]]
id = 1
kind = "source"

[[dhs.node]]
id = 2
kind = "load"
demand_series = [0.2, 0.3]

[[dhs.pipe]]
from = 1
to = 2
length = 100.0
diameter = 0.1
"#;

#[test]
fn minimal_case_parses_with_defaults_and_validates() {
    let case = load_case(MINIMAL).expect("minimal case parses");
    assert_eq!(case.grid.periods, 2);
    let bus2 = &case.eps.buses[1];
    assert_eq!(bus2.v_min, 0.81);
    assert_eq!(bus2.q_load, vec![0.0, 0.0]);
    assert_eq!(case.dhs.ground_temp, vec![8.0, 8.0]);
    let report = validate_case(&case);
    assert!(report.is_clean(), "{report}");
}

#[test]
fn wrong_schema_tag_is_rejected() {
    let text = MINIMAL.replace("chpd-case-v1", "chpd-case-v0");
    let err = load_case(&text).unwrap_err();
    assert!(err.to_string().contains("chpd-case-v0"), "{err}");
}

#[test]
fn unknown_profile_is_rejected() {
    let text = MINIMAL.replace("p_series = [0.1, 0.2]", "p_mw = 0.1\nprofile = \"weekday\"");
    let err = load_case(&text).unwrap_err();
    assert!(err.to_string().contains("weekday"), "{err}");
}

#[test]
fn series_length_mismatch_is_rejected() {
    let text = MINIMAL.replace("p_series = [0.1, 0.2]", "p_series = [0.1, 0.2, 0.3]");
    let err = load_case(&text).unwrap_err();
    assert!(err.to_string().contains("3"), "{err}");
}

#[test]
fn pump_pipe_without_pump_table_is_rejected() {
    let text = format!("{MINIMAL}kind = \"pump\"\n");
    let err = load_case(&text).unwrap_err();
    assert!(err.to_string().contains("pump"), "{err}");
}

#[test]
fn unknown_device_kind_is_rejected() {
    let text = MINIMAL.replace("kind = \"chp\"", "kind = \"diesel\"");
    let err = load_case(&text).unwrap_err();
    assert!(err.to_string().contains("diesel"), "{err}");
}

// --- validator findings ----------------------------------------------------

#[test]
fn validator_flags_duplicate_bus_ids() {
    let mut case = load_case(MINIMAL).unwrap();
    case.eps.buses[1].id = 1;
    assert!(validate_case(&case).has_errors());
}

#[test]
fn validator_flags_broken_topology() {
    // Reversing the only pipe leaves the load unreachable from the source.
    let mut case = load_case(MINIMAL).unwrap();
    let pipe = &mut case.dhs.pipes[0];
    std::mem::swap(&mut pipe.from, &mut pipe.to);
    let report = validate_case(&case);
    assert!(report.has_errors(), "{report}");
}

#[test]
fn validator_flags_inverted_bounds() {
    let mut case = load_case(MINIMAL).unwrap();
    case.dhs.nodes[0].ts_min = 120.0;
    assert!(validate_case(&case).has_errors());
}

#[test]
fn validator_flags_unattached_plant_node() {
    // The load node is not a source, so pointing the plant there is an error.
    let mut case = load_case(MINIMAL).unwrap();
    case.eps.devices[0].kind = DeviceKind::Chp {
        power_to_heat: 1.2,
        node: 2,
    };
    let report = validate_case(&case);
    assert!(report.has_errors(), "{report}");
}

#[test]
fn validator_warns_about_plantless_sources() {
    // Swapping the plant for a plain generator leaves source node 1 with no
    // device injecting heat: suspicious, but not an error.
    let mut case = load_case(MINIMAL).unwrap();
    case.eps.devices[0].kind = DeviceKind::Generator;
    let report = validate_case(&case);
    assert!(!report.has_errors(), "{report}");
    assert!(!report.is_clean(), "{report}");
}
