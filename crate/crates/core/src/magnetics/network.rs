use crate::linalg::DenseMatrix;
use crate::material::advance_state;
use crate::scalar::{lit, mu0, Scalar};

use super::elements::{
    gap_force, gap_permeance, hysteresis_field, reluctance_mmf, reluctance_mmf_slope, MagneticElement,
};
use super::NetworkError;

/// One element placed between two nodes.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub name: String,
    pub element: MagneticElement<T>,
    pub from: usize,
    pub to: usize,
}

impl<T> Branch<T> {
    pub fn new(name: impl Into<String>, element: MagneticElement<T>, from: usize, to: usize) -> Self {
        Self {
            name: name.into(),
            element,
            from,
            to,
        }
    }
}

/// A validated magnetic network. Node 0 is the reference node.
#[derive(Debug, Clone)]
pub struct CircuitNetwork<T> {
    nodes: Vec<String>,
    branches: Vec<Branch<T>>,
    hysteresis_slot: Vec<Option<usize>>,
    hysteresis: Vec<usize>,
}

impl<T: Scalar> CircuitNetwork<T> {
    pub fn new(nodes: Vec<String>, branches: Vec<Branch<T>>) -> Result<Self, NetworkError> {
        if branches.is_empty() {
            return Err(NetworkError::Empty);
        }
        let n = nodes.len();
        for b in &branches {
            if b.from >= n || b.to >= n {
                return Err(NetworkError::UnknownNode(b.name.clone()));
            }
            if b.from == b.to {
                return Err(NetworkError::SelfLoop(b.name.clone()));
            }
            b.element
                .check()
                .map_err(|m| NetworkError::InvalidElement(format!("{}: {m}", b.name)))?;
        }
        if !branches.iter().any(|b| matches!(b.element, MagneticElement::MmfSource { .. })) {
            return Err(NetworkError::NoSource);
        }
        // union-find connectivity
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for b in &branches {
            let (a, c) = (root(&mut parent, b.from), root(&mut parent, b.to));
            parent[a] = c;
        }
        let r0 = root(&mut parent, 0);
        if (0..n).any(|i| root(&mut parent, i) != r0) {
            return Err(NetworkError::Disconnected);
        }
        let mut hysteresis_slot = vec![None; branches.len()];
        let mut hysteresis = Vec::new();
        for (e, b) in branches.iter().enumerate() {
            if matches!(b.element, MagneticElement::HysteresisReluctance { .. }) {
                hysteresis_slot[e] = Some(hysteresis.len());
                hysteresis.push(e);
            }
        }
        Ok(Self {
            nodes,
            branches,
            hysteresis_slot,
            hysteresis,
        })
    }

    /// Fails unless some gap element carries force to the armature.
    pub fn require_force_gap(&self) -> Result<(), NetworkError> {
        if self.gap_elements().is_empty() {
            Err(NetworkError::NoGap)
        } else {
            Ok(())
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.name == name)
    }

    /// Indices of the force-carrying gaps.
    pub fn gap_elements(&self) -> Vec<usize> {
        self.indices(|e| e.is_force_gap())
    }

    pub fn source_elements(&self) -> Vec<usize> {
        self.indices(|e| matches!(e, MagneticElement::MmfSource { .. }))
    }

    pub fn eddy_elements(&self) -> Vec<usize> {
        self.indices(|e| matches!(e, MagneticElement::EddyElement { .. }))
    }

    /// Hysteresis elements in state-slot order.
    pub fn hysteresis_elements(&self) -> &[usize] {
        &self.hysteresis
    }

    pub fn hysteresis_slot(&self, element: usize) -> Option<usize> {
        self.hysteresis_slot[element]
    }

    fn indices(&self, pred: impl Fn(&MagneticElement<T>) -> bool) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&e| pred(&self.branches[e].element))
            .collect()
    }

    /// Number of flux plus potential unknowns.
    pub fn unknown_count(&self) -> usize {
        self.branches.len() + self.nodes.len() - 1
    }

    /// Total closing force of all force gaps.
    pub fn force(&self, fluxes: &[T]) -> T {
        self.gap_elements()
            .into_iter()
            .map(|e| match self.branches[e].element {
                MagneticElement::AirGapPermeance { area, .. } => gap_force(fluxes[e], area),
                _ => T::zero(),
            })
            .sum()
    }

    /// Writes the element and node equations into `r[cols.row..]` and the
    /// matching Jacobian entries.
    pub(crate) fn assemble(
        &self,
        op: &Operating<'_, T>,
        cols: &Columns,
        y: &[T],
        r: &mut [T],
        mut jac: Option<&mut DenseMatrix<T>>,
    ) {
        let m = self.branches.len();
        let pot = |node: usize| if node == 0 { T::zero() } else { y[cols.u + node - 1] };
        let ucol = |node: usize| if node == 0 { None } else { Some(cols.u + node - 1) };
        let mu = mu0::<T>();

        for (e, b) in self.branches.iter().enumerate() {
            let row = cols.row + e;
            let phi = y[cols.phi + e];
            let du = pot(b.from) - pot(b.to);
            // residual = du_coef·du − g(Φ, ...)
            let mut du_coef = T::one();
            let mut d_phi = T::zero();
            let mut d_i = T::zero();
            let mut d_x = T::zero();
            let res;
            match &b.element {
                MagneticElement::NonlinearReluctance { geometry, fit } => {
                    res = du - reluctance_mmf(geometry, fit, phi);
                    d_phi = -reluctance_mmf_slope(geometry, fit, phi);
                }
                MagneticElement::HysteresisReluctance { geometry, table } => {
                    let slot = self.hysteresis_slot[e].expect("slot assigned");
                    match op.hysteresis {
                        HysteresisMode::Frozen(js) => {
                            let h = hysteresis_field(geometry, phi, js[slot]);
                            res = du - h * geometry.length;
                            d_phi = -geometry.length / (mu * geometry.area);
                        }
                        HysteresisMode::Implicit { h_prev, j_prev } => {
                            // flux as a function of the element field
                            let h = du / geometry.length;
                            let j = advance_state(table, h_prev[slot], j_prev[slot], h);
                            let step = lit::<T>(1e-4) * (T::one() + h.abs());
                            let hs = if h >= h_prev[slot] { h + step } else { h - step };
                            let js = advance_state(table, h_prev[slot], j_prev[slot], hs);
                            let dj = (js - j) / (hs - h);
                            res = phi - geometry.area * (j + mu * h);
                            d_phi = T::one();
                            du_coef = -geometry.area * (dj + mu) / geometry.length;
                        }
                        HysteresisMode::Linearized { h_prev, j_prev, slopes } => {
                            let h = du / geometry.length;
                            let free = j_prev[slot] + slopes[slot] * (h - h_prev[slot]);
                            let j = table.clamp_state(h, free);
                            let dj = if j == free { slopes[slot] } else { T::zero() };
                            res = phi - geometry.area * (j + mu * h);
                            d_phi = T::one();
                            du_coef = -geometry.area * (dj + mu) / geometry.length;
                        }
                    }
                }
                MagneticElement::ConstantPermeance { permeance } => {
                    res = du - phi / *permeance;
                    d_phi = -T::one() / *permeance;
                }
                MagneticElement::AirGapPermeance { area, .. } => {
                    let g = gap_permeance(*area, op.x);
                    res = du - phi / g.permeance;
                    d_phi = -T::one() / g.permeance;
                    if !g.clamped {
                        d_x = -phi / (mu * *area);
                    }
                }
                MagneticElement::EddyElement { inductance } => match op.eddy {
                    EddyMode::Rates(rates) => {
                        res = du - *inductance * rates[e];
                    }
                    EddyMode::Implicit { phi_prev, inv_dt } => {
                        res = du - *inductance * (phi - phi_prev[e]) * inv_dt;
                        d_phi = -*inductance * inv_dt;
                    }
                },
                MagneticElement::MmfSource { turns } => {
                    let n = lit::<T>(*turns as f64);
                    res = du + n * op.current;
                    d_i = n;
                }
            }
            r[row] = res;
            if let Some(j) = jac.as_deref_mut() {
                j.add(row, cols.phi + e, d_phi);
                if let Some(c) = ucol(b.from) {
                    j.add(row, c, du_coef);
                }
                if let Some(c) = ucol(b.to) {
                    j.add(row, c, -du_coef);
                }
                if let Some(c) = cols.current {
                    j.add(row, c, d_i);
                }
                if let Some(c) = cols.x {
                    j.add(row, c, d_x);
                }
            }
        }

        // flux balance at every non-reference node
        let base = cols.row + m;
        for k in 1..self.nodes.len() {
            r[base + k - 1] = T::zero();
        }
        for (e, b) in self.branches.iter().enumerate() {
            let phi = y[cols.phi + e];
            if b.from != 0 {
                r[base + b.from - 1] += phi;
            }
            if b.to != 0 {
                r[base + b.to - 1] -= phi;
            }
            if let Some(j) = jac.as_deref_mut() {
                if b.from != 0 {
                    j.add(base + b.from - 1, cols.phi + e, T::one());
                }
                if b.to != 0 {
                    j.add(base + b.to - 1, cols.phi + e, -T::one());
                }
            }
        }
    }

    /// Element MMF drops u_from − u_to for a potential vector.
    pub fn drops(&self, potentials: &[T]) -> Vec<T> {
        self.branches
            .iter()
            .map(|b| potentials[b.from] - potentials[b.to])
            .collect()
    }
}

/// How eddy elements see the flux rate.
#[derive(Debug, Clone, Copy)]
pub(crate) enum EddyMode<'a, T> {
    /// Prescribed rate per element.
    Rates(&'a [T]),
    /// Backward difference against the previous step.
    Implicit { phi_prev: &'a [T], inv_dt: T },
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum HysteresisMode<'a, T> {
    /// Polarization held at the given value per slot.
    Frozen(&'a [T]),
    /// Polarization advanced from the previous step per slot.
    Implicit { h_prev: &'a [T], j_prev: &'a [T] },
    /// Slope frozen at the start of the step.
    Linearized {
        h_prev: &'a [T],
        j_prev: &'a [T],
        slopes: &'a [T],
    },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Operating<'a, T> {
    pub x: T,
    pub current: T,
    pub eddy: EddyMode<'a, T>,
    pub hysteresis: HysteresisMode<'a, T>,
}

/// Placement of the network unknowns and equations in a larger system.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Columns {
    pub phi: usize,
    pub u: usize,
    pub current: Option<usize>,
    pub x: Option<usize>,
    pub row: usize,
}
