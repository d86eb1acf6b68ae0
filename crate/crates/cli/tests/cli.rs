use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use switchmag::material::io::{parse_table, MaterialCard};
use switchmag::material::synthetic::SyntheticLoop;
use switchmag::material::{measured_permeability, synthesize_initial_curve, PermeabilityFit};
use tempfile::TempDir;

fn switchmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchmag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn table1_curve_file(dir: &TempDir) -> (PathBuf, usize) {
    let fit = PermeabilityFit::<f64>::x6crmos17();
    let b: Vec<f64> = (1..=160).map(|k| 0.01 * k as f64).collect();
    let curve = synthesize_initial_curve(&fit, &b).unwrap();
    let excluded = measured_permeability(&curve).iter().filter(|(_, mu)| *mu > 1000.0).count();
    let mut text = String::from("# H J\n");
    for (h, j) in curve.samples() {
        text.push_str(&format!("{h:.12e} {j:.12e}\n"));
    }
    (write(dir, "initial.txt", &text), excluded)
}

#[test]
fn fit_material_recovers_parameters() {
    let dir = TempDir::new().unwrap();
    let (input, expected_excluded) = table1_curve_file(&dir);
    let out = dir.path().join("card.toml");
    let o = switchmag(&["fit-material", "--input", s(&input), "--threshold", "1000", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let card = MaterialCard::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let p = card.permeability;
    for (got, want) in [(p.mu_i, 246.0), (p.b_mu_max, 0.995), (p.c_a, 13_400.0), (p.c_b, 5.0), (p.n, 12.8)] {
        assert!((got - want).abs() <= 0.005 * want, "{got} vs {want}");
    }
    let fit = card.fit.unwrap();
    assert_eq!(fit.excluded_points, expected_excluded);
    assert!(expected_excluded > 0);
    assert_eq!(fit.used_points + fit.excluded_points, 160);
}

#[test]
fn fit_material_rejects_empty_input() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "empty.txt", "");
    let o = switchmag(&["fit-material", "--input", s(&input)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("parse error"), "{}", stderr(&o));
    let input = write(&dir, "bad.txt", "1 2\n3 oops\n");
    let o = switchmag(&["fit-material", "--input", s(&input)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

fn loop_file(dir: &TempDir, shift: f64, offset: f64) -> PathBuf {
    let l = SyntheticLoop::default();
    let hs = SyntheticLoop::field_samples(59_500.0, 300);
    let mut text = String::new();
    for &h in hs.iter().rev() {
        text.push_str(&format!("{h:.9e} {:.12e}\n", l.falling(h + shift) + offset));
    }
    for &h in hs.iter().skip(1) {
        text.push_str(&format!("{h:.9e} {:.12e}\n", l.rising(h + shift) + offset));
    }
    write(dir, "loop.txt", &text)
}

#[test]
fn build_hyst_table_from_loop() {
    let dir = TempDir::new().unwrap();
    let input = loop_file(&dir, 0.0, 0.0);
    let out = dir.path().join("table.txt");
    let o = switchmag(&["build-hyst-table", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = parse_table::<f64>(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.len(), 61);
    assert!(table.symmetry_error() < 1e-9);
}

#[test]
fn build_hyst_table_symmetrizes_and_checks_count() {
    let dir = TempDir::new().unwrap();
    let input = loop_file(&dir, 15.0, 0.02);
    let out = dir.path().join("table.txt");
    let o = switchmag(&["build-hyst-table", "--input", s(&input), "--count", "31", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = parse_table::<f64>(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.len(), 31);
    assert!(table.symmetry_error() < 1e-9, "{}", table.symmetry_error());

    let o = switchmag(&["build-hyst-table", "--input", s(&input), "--count", "3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid count"), "{}", stderr(&o));
}

#[test]
fn build_hyst_table_from_derivatives() {
    let dir = TempDir::new().unwrap();
    let l = SyntheticLoop::default();
    let mut text = String::from("# H_fall dJ_fall H_rise dJ_rise\n");
    for h in SyntheticLoop::field_samples(59_500.0, 400) {
        text.push_str(&format!("{h:e} {:e} {h:e} {:e}\n", l.falling_slope(h), l.rising_slope(h)));
    }
    let input = write(&dir, "deriv.txt", &text);
    let o = switchmag(&["build-hyst-table", "--input", s(&input)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = parse_table::<f64>(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(table.len(), 61);
}

#[test]
fn simulate_writes_series_and_metrics() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = switchmag(&["simulate", "--scenario", "switch", "--out", s(&out), "--seedless"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("switch.csv")).unwrap();
    assert!(csv.starts_with("# scenario: switch\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5002);
    let metrics: toml::Table = std::fs::read_to_string(out.join("metrics.toml")).unwrap().parse().unwrap();
    let run = &metrics["runs"].as_array().unwrap()[0];
    let closing = run["closing_time"].as_float().unwrap();
    assert!(closing < 2e-3);
    assert_eq!(run["latched"].as_bool(), Some(false));
}

#[test]
fn simulate_sweep_from_config() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", "scenario = \"switch\"\n[run]\nt_end = 3e-3\n");
    let out = dir.path().join("run");
    let o = switchmag(&[
        "simulate",
        "--config",
        s(&config),
        "--sweep",
        "mechanics.x_min=1e-5,2e-5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("switch_x_min_1e-5.csv").is_file());
    assert!(out.join("switch_x_min_2e-5.csv").is_file());
    let metrics = std::fs::read_to_string(out.join("metrics.toml")).unwrap();
    assert!(metrics.contains("reference = \"x_min=2e-5\""), "{metrics}");
}

#[test]
fn simulate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    let bad = write(&dir, "bad.toml", "scenario = \"switch\"\nmaterial = \"nowhere.toml\"\n");
    let o = switchmag(&["simulate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!out.exists(), "no output before validation passes");

    let o = switchmag(&["simulate", "--scenario", "switch", "--sweep", "mechanics.x_min=oops", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let o = switchmag(&["simulate", "--scenario", "unknown"]);
    assert_eq!(code(&o), 2);

    let strict = write(
        &dir,
        "strict.toml",
        "scenario = \"switch\"\n[solver]\nrel_tol = 1e-14\nabs_tol_x = 1e-20\nabs_tol_v = 1e-20\n\
         abs_tol_i = 1e-20\nabs_tol_flux = 1e-24\ndt_init = 1e-6\ndt_min = 1e-7\n",
    );
    let o = switchmag(&["simulate", "--config", s(&strict), "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn analyze_delay_and_load_lines() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = switchmag(&["simulate", "--scenario", "switch", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = out.join("switch.csv");
    let o = switchmag(&["analyze", s(&csv), "--reference", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: toml::Table = String::from_utf8(o.stdout).unwrap().parse().unwrap();
    let run = &doc["runs"].as_array().unwrap()[0];
    assert_eq!(run["opening_delay"].as_float(), Some(0.0));

    let res = dir.path().join("analysis");
    let o = switchmag(&[
        "analyze",
        "--iron-path",
        "39.2e-3",
        "--residual-gap",
        "1e-6,4e-6",
        "--field",
        "-150",
        "--out",
        s(&res),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: toml::Table = std::fs::read_to_string(res.join("analysis.toml")).unwrap().parse().unwrap();
    let lines = doc["load_line"].as_array().unwrap();
    let b1 = lines[0]["b"].as_float().unwrap();
    let b4 = lines[1]["b"].as_float().unwrap();
    assert!((b1 - 3.69).abs() < 0.01, "{b1}");
    assert!((b4 - 0.923).abs() < 0.002, "{b4}");
    assert!(res.join("load_lines.csv").is_file());
}

#[test]
fn analyze_names_missing_channels() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "s.csv", "# x_min: 1e-6\n# x_max: 5e-4\n# t_off: 2e-3\nt [s],x [m]\n0,1\n");
    let o = switchmag(&["analyze", s(&csv)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing channels: gap"), "{}", stderr(&o));
}
