use crate::linalg::DenseMatrix;
use crate::newton::{newton_solve, NewtonOptions, NonlinearSystem};
use crate::scalar::{lit, Scalar};

use super::elements::{gap_permeance, hysteresis_field_energy, reluctance_energy, MagneticElement};
use super::network::{CircuitNetwork, Columns, EddyMode, HysteresisMode, Operating};
use super::NetworkError;

/// Operating point for a magnetostatic solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticInput<T> {
    /// Coil current; every source contributes turns·current.
    pub current: T,
    /// Armature coordinate, equal to the working-gap length, in m.
    pub x: T,
    /// Polarization per hysteresis slot, held fixed.
    pub j_states: Vec<T>,
    /// Flux rate per element, read by eddy elements only.
    pub flux_rates: Vec<T>,
}

impl<T: Scalar> StaticInput<T> {
    pub fn new(network: &CircuitNetwork<T>, current: T, x: T) -> Self {
        Self {
            current,
            x,
            j_states: vec![T::zero(); network.hysteresis_elements().len()],
            flux_rates: vec![T::zero(); network.len()],
        }
    }

    /// Drive given as current linkage of the first source.
    pub fn from_mmf(network: &CircuitNetwork<T>, mmf: T, x: T) -> Self {
        let turns = network
            .source_elements()
            .first()
            .map(|&e| match network.branches()[e].element {
                MagneticElement::MmfSource { turns } => turns,
                _ => 1,
            })
            .unwrap_or(1);
        Self::new(network, mmf / lit(turns as f64), x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSolution<T> {
    /// Flux per element, from-node to to-node.
    pub fluxes: Vec<T>,
    /// MMF drop u_from − u_to per element.
    pub mmfs: Vec<T>,
    /// Magnetic potential per node; the reference node is 0.
    pub potentials: Vec<T>,
    /// Flux through the first force-carrying gap.
    pub gap_flux: T,
    /// Total closing force of all force gaps, in N.
    pub force: T,
    pub iterations: usize,
}

struct StaticSystem<'a, T> {
    net: &'a CircuitNetwork<T>,
    input: &'a StaticInput<T>,
    current: T,
}

impl<T: Scalar> NonlinearSystem<T> for StaticSystem<'_, T> {
    fn dim(&self) -> usize {
        self.net.unknown_count()
    }

    fn eval(&mut self, y: &[T], r: &mut [T], jac: Option<&mut DenseMatrix<T>>) {
        let op = Operating {
            x: self.input.x,
            current: self.current,
            eddy: EddyMode::Rates(&self.input.flux_rates),
            hysteresis: HysteresisMode::Frozen(&self.input.j_states),
        };
        let cols = Columns {
            phi: 0,
            u: self.net.len(),
            current: None,
            x: None,
            row: 0,
        };
        self.net.assemble(&op, &cols, y, r, jac);
    }
}

/// Solves node flux balance and element laws for the given drive,
/// armature position and frozen material states.
pub fn solve_magnetics<T: Scalar>(
    network: &CircuitNetwork<T>,
    input: &StaticInput<T>,
) -> Result<MagneticSolution<T>, NetworkError> {
    if input.j_states.len() != network.hysteresis_elements().len() {
        return Err(NetworkError::StateLength("j_states".into()));
    }
    if input.flux_rates.len() != network.len() {
        return Err(NetworkError::StateLength("flux_rates".into()));
    }
    let m = network.len();
    let dim = network.unknown_count();
    let mut drive = T::zero();
    for &e in &network.source_elements() {
        if let MagneticElement::MmfSource { turns } = network.branches()[e].element {
            drive += lit::<T>(turns as f64) * input.current.abs();
        }
    }
    for (b, rate) in network.branches().iter().zip(&input.flux_rates) {
        if let MagneticElement::EddyElement { inductance } = b.element {
            drive += inductance * rate.abs();
        }
    }
    for (&e, j) in network.hysteresis_elements().iter().zip(&input.j_states) {
        if let Some(area) = network.branches()[e].element.area() {
            drive += j.abs() * area * lit(1e7);
        }
    }
    let scale = drive.max(lit(1e-6));
    let rel = lit::<T>(1e-11);
    let weights: Vec<T> = (0..dim)
        .map(|k| if k < m { rel * scale * lit(1e-7) } else { rel * scale })
        .collect();
    let opts = NewtonOptions {
        max_iter: 60,
        tol: T::one(),
        max_backtracks: 20,
    };

    let mut y = vec![T::zero(); dim];
    let mut sys = StaticSystem {
        net: network,
        input,
        current: input.current,
    };
    let report = match newton_solve(&mut sys, &mut y, &weights, opts) {
        Ok(rep) => rep,
        Err(_) => {
            // continuation in the drive current
            y.iter_mut().for_each(|v| *v = T::zero());
            let mut last = None;
            for k in 1..=8 {
                sys.current = input.current * lit::<T>(k as f64 / 8.0);
                last = Some(newton_solve(&mut sys, &mut y, &weights, opts)?);
            }
            last.expect("continuation ran")
        }
    };

    let fluxes = y[..m].to_vec();
    let mut potentials = vec![T::zero(); network.node_count()];
    potentials[1..].copy_from_slice(&y[m..]);
    let mmfs = network.drops(&potentials);
    let gap_flux = network
        .gap_elements()
        .first()
        .map(|&e| fluxes[e])
        .unwrap_or_else(T::zero);
    let force = network.force(&fluxes);
    Ok(MagneticSolution {
        fluxes,
        mmfs,
        potentials,
        gap_flux,
        force,
        iterations: report.iterations,
    })
}

/// Magnetic energy held by the passive elements. Hysteretic tubes count
/// only their field part μ0·H²/2; eddy elements store nothing.
pub fn stored_energy<T: Scalar>(network: &CircuitNetwork<T>, fluxes: &[T], x: T, j_states: &[T]) -> T {
    let mut w = T::zero();
    for (e, b) in network.branches().iter().enumerate() {
        let phi = fluxes[e];
        w += match &b.element {
            MagneticElement::NonlinearReluctance { geometry, fit } => reluctance_energy(geometry, fit, phi),
            MagneticElement::HysteresisReluctance { geometry, .. } => {
                let slot = network.hysteresis_slot(e).expect("slot");
                hysteresis_field_energy(geometry, phi, j_states[slot])
            }
            MagneticElement::ConstantPermeance { permeance } => phi * phi / (lit::<T>(2.0) * *permeance),
            MagneticElement::AirGapPermeance { area, .. } => {
                phi * phi / (lit::<T>(2.0) * gap_permeance(*area, x).permeance)
            }
            MagneticElement::EddyElement { .. } | MagneticElement::MmfSource { .. } => T::zero(),
        };
    }
    w
}

/// Co-energy N·i·Φ_coil − W of a magnetostatic solution.
pub fn co_energy<T: Scalar>(network: &CircuitNetwork<T>, input: &StaticInput<T>, solution: &MagneticSolution<T>) -> T {
    let mut linkage = T::zero();
    for &e in &network.source_elements() {
        if let MagneticElement::MmfSource { turns } = network.branches()[e].element {
            linkage += lit::<T>(turns as f64) * input.current * solution.fluxes[e];
        }
    }
    linkage - stored_energy(network, &solution.fluxes, input.x, &input.j_states)
}
