use std::path::Path;

use switchmag::scenario::*;
use switchmag::solver::{csv_metadata, TimeSeries};

fn sweep(kind: ScenarioKind, values: &[f64]) -> LoadedConfig {
    let mut l = LoadedConfig::defaults(kind);
    l.set_sweep(SweepSpec {
        parameter: "mechanics.x_min".into(),
        values: values.to_vec(),
    });
    l
}

#[test]
fn switch_closes_before_switch_off() {
    let out = run_scenario(&LoadedConfig::defaults(ScenarioKind::Switch)).unwrap();
    let m = &out.runs[0].metrics;
    let closing = m.closing_time.unwrap();
    assert!(closing > 0.0 && closing < 2e-3, "{closing}");
    assert!(m.opening_time.unwrap() > 2e-3);
    assert!(!m.latched);
    assert!(m.energy_residual.unwrap() < 1e-2);
}

#[test]
fn sweep_metrics_do_not_depend_on_order() {
    let a = run_scenario(&sweep(ScenarioKind::Switch, &[10e-6, 5e-6, 20e-6])).unwrap();
    let b = run_scenario(&sweep(ScenarioKind::Switch, &[20e-6, 10e-6, 5e-6])).unwrap();
    for r in &a.runs {
        let other = b.run(&r.label).unwrap();
        assert_eq!(r.metrics, other.metrics, "{}", r.label);
        assert_eq!(r.series, other.series);
    }
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.summary.reference.as_deref(), Some("x_min=2e-5"));
}

#[test]
fn emitted_csv_round_trips() {
    let mut l = LoadedConfig::defaults(ScenarioKind::Switch);
    l.set_value("run.t_end", 1e-3).unwrap();
    let out = run_scenario(&l).unwrap();
    let run = &out.runs[0];
    let text = run.to_csv(out.scenario);
    let back = TimeSeries::from_csv(&text).unwrap();
    assert_eq!(back, run.series.rounded());
    assert_eq!(back.len(), 1001);
    let meta = csv_metadata(&text);
    assert!(meta.contains(&("scenario".into(), "switch".into())));
    assert!(meta.contains(&("x_min".into(), "1e-6".into())));
    assert!(text.lines().any(|l| l.starts_with("t [s],x [m]")));
}

#[test]
fn latches_just_below_the_threshold() {
    let out = run_scenario(&sweep(ScenarioKind::ResidualGapSweep, &[3.48e-6])).unwrap();
    let m = &out.runs[0].metrics;
    assert!(m.latched);
    assert!(m.opening_time.is_none() && m.opening_delay.is_none());
}

#[test]
fn eddy_compare_pairs_the_two_presets() {
    let out = run_scenario(&LoadedConfig::defaults(ScenarioKind::EddyCompare)).unwrap();
    assert_eq!(out.runs.len(), 2);
    let eddy = out.run("eddyladder").unwrap();
    assert!(eddy.series.column("b_shell_6").is_some());
    assert!(eddy.metrics.opening_delay.unwrap() > 0.0);
    assert_eq!(out.summary.reference.as_deref(), Some("full"));
    assert!(out.csv_name(eddy).ends_with("eddy_compare_eddyladder.csv"));
}

#[test]
fn shipped_configs_plan() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let l = LoadedConfig::from_path(&path).unwrap();
            assert!(!plan_scenario(&l).unwrap().is_empty(), "{}", path.display());
            n += 1;
        }
    }
    assert_eq!(n, 4);
}

#[test]
fn bad_configurations_fail_before_compute() {
    let dir = std::env::temp_dir();
    let err = |text: &str| plan_scenario(&LoadedConfig::parse(text, &dir)?).map(|_| ());
    assert!(matches!(err("scenario = \"switch\"\nmaterial = \"missing.toml\"\n"), Err(ScenarioError::Config(_))));
    assert!(matches!(err("scenario = \"switch\"\n[mechanics]\nmass2 = 1.0\n"), Err(ScenarioError::Config(_))));
    assert!(matches!(err("scenario = \"nope\"\n"), Err(ScenarioError::Config(_))));
    assert!(err("scenario = \"switch\"\n[run]\nt_end = -1.0\n").is_err());
    let bad = err("scenario = \"switch\"\n[sweep]\nparameter = \"mechanics.x_min\"\nvalues = [1e-6, -1e-6]\n");
    assert!(bad.is_err());
    assert!(!bad.unwrap_err().is_solver_failure());
    assert!(err("scenario = \"switch\"\n[sweep]\nparameter = \"scenario.x\"\nvalues = [1.0]\n").is_err());
}

#[test]
fn sweep_keeps_integer_fields_integral() {
    let mut l = LoadedConfig::defaults(ScenarioKind::ShellFlux);
    l.set_value("network.geometry.shells", 3.0).unwrap();
    assert_eq!(l.config.network.geometry.shells, 3);
    assert!(l.set_value("network.geometry.shells", 2.5).is_err());
}
