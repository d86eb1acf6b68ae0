use approx::assert_relative_eq;
use switchmag::magnetics::*;
use switchmag::material::{Material, Resistivity};

fn preset(p: NetworkPreset) -> CircuitNetwork<f64> {
    let spec = NetworkSpec::Preset {
        preset: p,
        geometry: ActuatorGeometry::default(),
    };
    assemble_network(&spec, &Material::x6crmos17(), 131).unwrap()
}

fn check_balance(net: &CircuitNetwork<f64>, sol: &MagneticSolution<f64>) {
    let scale = sol.fluxes.iter().fold(0.0f64, |a, f| a.max(f.abs())).max(1e-30);
    for node in 0..net.node_count() {
        let mut sum = 0.0;
        for (e, b) in net.branches().iter().enumerate() {
            if b.from == node {
                sum += sol.fluxes[e];
            }
            if b.to == node {
                sum -= sol.fluxes[e];
            }
        }
        assert!(sum.abs() <= 1e-12 * scale, "node {node} imbalance {sum}");
    }
}

#[test]
fn full_preset_structure() {
    let net = preset(NetworkPreset::Full);
    assert_eq!(net.gap_elements().len(), 2);
    assert_eq!(net.source_elements().len(), 1);
    assert!(net.find("stray_window").is_some());
    assert!(net.find("stray_leakage").is_some());
}

#[test]
fn eddy_ladder_structure() {
    let net = preset(NetworkPreset::EddyLadder);
    assert!(net.find("inner_pole").is_none());
    let top = net.branches()[net.find("inner_gap").unwrap()].from;
    for k in 1..=6 {
        let shell = &net.branches()[net.find(&format!("shell_{k}")).unwrap()];
        let eddy = &net.branches()[net.find(&format!("eddy_{k}")).unwrap()];
        assert!(matches!(shell.element, MagneticElement::NonlinearReluctance { .. }));
        assert!(matches!(eddy.element, MagneticElement::EddyElement { .. }));
        assert_eq!(shell.to, eddy.from);
        assert_eq!(eddy.to, top);
    }
    // outer shells are thinner, so their eddy paths have more resistance
    let l = |k: usize| match net.branches()[net.find(&format!("eddy_{k}")).unwrap()].element {
        MagneticElement::EddyElement { inductance } => inductance,
        _ => unreachable!(),
    };
    assert!(l(1) < l(6));
}

#[test]
fn simplified_preset_uses_hysteresis() {
    let net = preset(NetworkPreset::HysteresisSimplified);
    assert_eq!(net.hysteresis_elements().len(), 4);
    assert!(net.find("stray_leakage").is_none());
    assert!(net.find("stray_window").is_some());
}

#[test]
fn explicit_empty_list_is_rejected() {
    let spec = NetworkSpec::Explicit(vec![]);
    assert_eq!(
        assemble_network::<f64>(&spec, &Material::x6crmos17(), 131).unwrap_err(),
        NetworkError::Empty
    );
}

#[test]
fn sourceless_and_disconnected_networks_are_rejected() {
    let p = |name: &str, from: usize, to: usize| {
        Branch::new(name, MagneticElement::ConstantPermeance { permeance: 1e-7 }, from, to)
    };
    let names = |n: usize| (0..n).map(|i| format!("n{i}")).collect::<Vec<_>>();
    assert_eq!(
        CircuitNetwork::new(names(2), vec![p("a", 0, 1)]).unwrap_err(),
        NetworkError::NoSource
    );
    let src = Branch::new("s", MagneticElement::MmfSource { turns: 1 }, 0, 1);
    assert_eq!(
        CircuitNetwork::new(names(4), vec![src, p("a", 1, 0), p("b", 2, 3)]).unwrap_err(),
        NetworkError::Disconnected
    );
}

#[test]
fn zero_drive_gives_zero_flux() {
    let net = preset(NetworkPreset::Full);
    let sol = solve_magnetics(&net, &StaticInput::new(&net, 0.0, 0.5e-3)).unwrap();
    assert!(sol.fluxes.iter().all(|f| *f == 0.0));
    assert_eq!(sol.force, 0.0);
}

#[test]
fn single_permeance_obeys_ohms_law() {
    let lambda = 2.5e-7;
    let net = CircuitNetwork::new(
        vec!["a".into(), "b".into()],
        vec![
            Branch::new("coil", MagneticElement::MmfSource { turns: 100 }, 0, 1),
            Branch::new("p", MagneticElement::ConstantPermeance { permeance: lambda }, 1, 0),
        ],
    )
    .unwrap();
    let sol = solve_magnetics(&net, &StaticInput::new(&net, 3.0, 0.0)).unwrap();
    assert_relative_eq!(sol.fluxes[1], lambda * 300.0, max_relative = 1e-12);
    assert_relative_eq!(sol.mmfs[1], 300.0, max_relative = 1e-12);
}

#[test]
fn working_point_near_one_tesla() {
    let net = preset(NetworkPreset::Full);
    let sol = solve_magnetics(&net, &StaticInput::from_mmf(&net, 800.0, 0.5e-3)).unwrap();
    check_balance(&net, &sol);
    let g = net.find("outer_gap").unwrap();
    let b = sol.fluxes[g] / 75.4e-6;
    assert!((0.8..=1.2).contains(&b), "B_gap = {b}");
    // loop balance: coil MMF equals the drops around the main loop
    let around: f64 = ["inner_pole", "inner_gap", "armature", "outer_gap", "outer_pole", "base"]
        .iter()
        .map(|n| sol.mmfs[net.find(n).unwrap()])
        .sum();
    assert_relative_eq!(around, 800.0, max_relative = 1e-9);
}

#[test]
fn saturated_and_tiny_gap_solves_converge() {
    let net = preset(NetworkPreset::Full);
    for (mmf, x) in [(1048.0, 1e-6), (5000.0, 1e-6), (1048.0, 5.27e-4), (-3000.0, 2e-5)] {
        let sol = solve_magnetics(&net, &StaticInput::from_mmf(&net, mmf, x)).unwrap();
        check_balance(&net, &sol);
        assert!(sol.force >= 0.0);
    }
}

#[test]
fn force_matches_co_energy_derivative() {
    let net = preset(NetworkPreset::Full);
    let delta = 1e-7;
    for x in [50e-6, 100e-6, 250e-6, 527e-6] {
        for current in [2.0, 6.1, 8.0] {
            let at = |x: f64| {
                let input = StaticInput::new(&net, current, x);
                let sol = solve_magnetics(&net, &input).unwrap();
                (co_energy(&net, &input, &sol), sol.force)
            };
            let (_, force) = at(x);
            let (wp, _) = at(x + delta);
            let (wm, _) = at(x - delta);
            let fd = -(wp - wm) / (2.0 * delta);
            assert_relative_eq!(force, fd, max_relative = 0.01);
        }
    }
}

#[test]
fn lossless_ladder_equals_single_reluctance() {
    let mut material = Material::x6crmos17();
    material.resistivity = Resistivity::new(1e40).unwrap();
    let spec = NetworkSpec::Preset {
        preset: NetworkPreset::EddyLadder,
        geometry: ActuatorGeometry::default(),
    };
    let ladder = assemble_network::<f64>(&spec, &material, 131).unwrap();
    let full = preset(NetworkPreset::Full);
    for x in [1e-6, 1e-4, 5e-4] {
        let mut input = StaticInput::new(&ladder, 8.0, x);
        input.flux_rates.iter_mut().for_each(|r| *r = 3.7);
        let a = solve_magnetics(&ladder, &input).unwrap();
        let b = solve_magnetics(&full, &StaticInput::new(&full, 8.0, x)).unwrap();
        assert_relative_eq!(a.force, b.force, max_relative = 0.005);
        assert_relative_eq!(a.gap_flux, b.gap_flux, max_relative = 0.005);
    }
}
