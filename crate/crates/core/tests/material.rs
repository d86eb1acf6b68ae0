use std::time::Instant;

use switchmag::material::{
    fit_permeability, reconstruct_initial_curve, synthesize_initial_curve, FitOptions, Material,
    PermeabilityFit,
};

fn table1_curve() -> switchmag::material::BHCurve<f64> {
    let fit = PermeabilityFit::<f64>::x6crmos17();
    let b: Vec<f64> = (1..=160).map(|k| 0.01 * k as f64).collect();
    synthesize_initial_curve(&fit, &b).unwrap()
}

#[test]
fn fit_recovers_table1_parameters() {
    let curve = table1_curve();
    let start = Instant::now();
    let report = fit_permeability(
        &curve,
        FitOptions {
            exclude_above_mu: f64::INFINITY,
            b_mu_max_hint: None,
        },
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let want = PermeabilityFit::<f64>::x6crmos17();
    let got = report.fit;
    for (name, g, w) in [
        ("mu_i", got.mu_i, want.mu_i),
        ("B_mu_max", got.b_mu_max, want.b_mu_max),
        ("c_a", got.c_a, want.c_a),
        ("c_b", got.c_b, want.c_b),
        ("n", got.n, want.n),
    ] {
        assert!((g - w).abs() <= 0.005 * w.abs(), "{name}: {g} vs {w}");
    }
    assert!(elapsed < 5.0, "fit took {elapsed} s");
    assert_eq!(report.excluded_points, 0);
}

#[test]
fn reconstructed_initial_curve_stays_in_band() {
    let material = Material::<f64>::x6crmos17();
    let table = material.hysteresis.unwrap();
    let curve = reconstruct_initial_curve(&table, 500.0, 200).unwrap();
    for &(h, j) in curve.samples() {
        let (lo, hi) = table.band(h);
        assert!(j >= lo - 1e-9 && j <= hi + 1e-9, "H={h} J={j} band=({lo},{hi})");
    }
    let js: Vec<f64> = curve.j();
    assert!(js.windows(2).all(|w| w[1] >= w[0]));
}
