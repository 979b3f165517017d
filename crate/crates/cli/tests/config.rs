use std::f64::consts::PI;
use std::path::PathBuf;

use proptest::prelude::*;
use stirap_cli::config::{ConfigError, SimulationConfig};
use stirap_core::pulses::PulseShape;
use stirap_core::C64;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

const MINIMAL: &str = "\
[qubit]
alpha = 1
beta = 0

[rotation]
chi = \"-pi/12\"
eta = 0
delta = \"pi\"

[pulses]
omega0 = 20
tau = 2
t0 = 1.6
big_t = 20
";

fn parse_err(src: &str) -> ConfigError {
    SimulationConfig::parse(src).expect_err("config should be rejected")
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["fig2_rotation.toml", "fig2_return.toml"] {
        let cfg = SimulationConfig::load(&shipped(name)).unwrap();
        let text = cfg.to_toml_string();
        let again = SimulationConfig::parse(&text).unwrap();
        assert_eq!(again, cfg, "{name}");
        assert_eq!(again.to_toml_string(), text, "{name}");
    }
}

#[test]
fn return_config_differs_only_in_delta_and_dir() {
    let rot = SimulationConfig::load(&shipped("fig2_rotation.toml")).unwrap();
    let ret = SimulationConfig::load(&shipped("fig2_return.toml")).unwrap();
    assert_eq!(rot.schedule.delta, PI);
    assert_eq!(ret.schedule.delta, 0.0);
    assert_eq!(ret.schedule.chi, -PI / 12.0);
    assert_eq!((rot.alpha, rot.beta), (ret.alpha, ret.beta));
    assert_eq!(rot.numerics, ret.numerics);
}

#[test]
fn defaults_fill_optional_sections() {
    let cfg = SimulationConfig::parse(MINIMAL).unwrap();
    assert_eq!(cfg.schedule.detuning, 0.0);
    assert_eq!(cfg.schedule.shape, PulseShape::Gaussian);
    assert_eq!(cfg.numerics.step, None);
    assert_eq!(cfg.output.sample_stride, 1);
    assert_eq!(cfg.propagator().step, 0.001);
}

#[test]
fn explicit_step_and_shape() {
    let src = format!("{MINIMAL}shape = \"sin_squared\"\n[numerics]\nstep = \"1/400\"\ncertificate = false\n");
    let cfg = SimulationConfig::parse(&src).unwrap();
    assert_eq!(cfg.schedule.shape, PulseShape::SinSquared);
    assert_eq!(cfg.numerics.step, Some(0.0025));
    assert!(!cfg.numerics.certificate);
    assert_eq!(cfg.propagator().step, 0.0025);
}

#[test]
fn invalid_value_names_line_and_field() {
    let err = parse_err(&MINIMAL.replace("tau = 2", "tau = -2"));
    assert_eq!(err.line(), Some(12));
    assert_eq!(err.field(), Some("pulses.tau"));
    let msg = err.to_string();
    assert!(msg.contains("line 12") && msg.contains("pulses.tau"), "{msg}");
}

#[test]
fn cross_field_violation_points_at_big_t() {
    let err = parse_err(&MINIMAL.replace("big_t = 20", "big_t = 3"));
    assert_eq!(err.field(), Some("pulses.big_t"));
    assert_eq!(err.line(), Some(14));
}

#[test]
fn bad_expression_names_line_and_field() {
    let err = parse_err(&MINIMAL.replace("\"-pi/12\"", "\"-pi/\""));
    assert_eq!(err.field(), Some("rotation.chi"));
    assert_eq!(err.line(), Some(6));
    let err = parse_err(&MINIMAL.replace("\neta = 0", "\neta = \"theta\""));
    assert_eq!(err.field(), Some("rotation.eta"));
    assert!(err.to_string().contains("theta"));
}

#[test]
fn missing_field_is_named() {
    let err = parse_err(&MINIMAL.replace("\neta = 0\n", "\n"));
    assert_eq!(err.field(), Some("rotation.eta"));
    assert_eq!(err.line(), Some(5));
    let err = parse_err(&MINIMAL.replace("[pulses]", "[pulse]"));
    assert!(err.to_string().contains("pulse"), "{err}");
}

#[test]
fn unknown_field_is_rejected_with_line() {
    let err = parse_err(&MINIMAL.replace("\neta = 0", "\neta = 0\ngamma = 1"));
    assert_eq!(err.line(), Some(8));
    assert!(err.to_string().contains("gamma"), "{err}");
}

#[test]
fn zero_qubit_is_rejected() {
    let err = parse_err(&MINIMAL.replace("alpha = 1", "alpha = 0"));
    assert_eq!(err.field(), Some("qubit"));
    assert_eq!(err.line(), Some(2));
}

#[test]
fn malformed_toml_reports_line() {
    let err = parse_err(&MINIMAL.replace("t0 = 1.6", "t0 = = 1.6"));
    assert_eq!(err.line(), Some(13));
}

#[test]
fn type_errors_name_the_field() {
    let err = parse_err(&format!("{MINIMAL}[output]\nsample_stride = 0\n"));
    assert_eq!(err.field(), Some("output.sample_stride"));
    assert_eq!(err.line(), Some(16));
    let err = parse_err(&format!("{MINIMAL}[numerics]\ncertificate = 1\n"));
    assert_eq!(err.field(), Some("numerics.certificate"));
    let err = parse_err(&format!("{MINIMAL}[numerics]\nfidelity_threshold = 1.5\n"));
    assert_eq!(err.field(), Some("numerics.fidelity_threshold"));
    let err = parse_err(&MINIMAL.replace("omega0 = 20", "omega0 = [20]"));
    assert_eq!(err.field(), Some("pulses.omega0"));
}

proptest! {
    #[test]
    fn random_configs_round_trip(
        re in -10.0f64..10.0, im in -10.0f64..10.0, b in 0.1f64..10.0,
        chi in -2.0f64..2.0, eta in -7.0f64..7.0, delta in -7.0f64..7.0,
        omega0 in 0.0f64..100.0, tau in 0.1f64..5.0, t0 in 0.1f64..3.0, gap in 0.01f64..30.0,
        detuning in -5.0f64..5.0, sin2 in any::<bool>(),
        step in proptest::option::of(1e-4f64..0.1), stride in 1usize..20,
    ) {
        let mut cfg = SimulationConfig::default();
        cfg.alpha = C64::new(re, im);
        cfg.beta = C64::new(0.0, b);
        cfg.schedule.chi = chi;
        cfg.schedule.eta = eta;
        cfg.schedule.delta = delta;
        cfg.schedule.omega0 = omega0;
        cfg.schedule.tau = tau;
        cfg.schedule.t0 = t0;
        cfg.schedule.big_t = 2.0 * t0 + gap;
        cfg.schedule.detuning = detuning;
        cfg.schedule.shape = if sin2 { PulseShape::SinSquared } else { PulseShape::Gaussian };
        cfg.numerics.step = step;
        cfg.output.sample_stride = stride;
        cfg.output.dir = PathBuf::from("some dir/with \"quotes\"");
        let parsed = SimulationConfig::parse(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(parsed, cfg);
    }
}
