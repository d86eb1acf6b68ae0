//! Magnetic equivalent circuits: element laws, network assembly and the
//! magnetostatic solve.

pub mod elements;
pub mod geometry;
mod network;
mod presets;
mod solve;

pub use elements::{
    eddy_mmf, gap_force, gap_permeance, hysteresis_mmf, reluctance_mmf, GapPermeance, MagneticElement, GAP_FLOOR,
};
pub use geometry::{
    shell_eddy_resistance, shell_magnetic_inductance, shell_partition, FluxTubeGeometry, HollowCylinderShell,
};
pub use network::{Branch, CircuitNetwork};
pub(crate) use network::{Columns, EddyMode, HysteresisMode, Operating};
pub use presets::{assemble_network, prismatic_permeance, ActuatorGeometry, ElementSpec, NetworkPreset, NetworkSpec};
pub use solve::{co_energy, solve_magnetics, stored_energy, MagneticSolution, StaticInput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("network has no elements")]
    Empty,
    #[error("element '{0}' references an unknown node")]
    UnknownNode(String),
    #[error("element '{0}' connects a node to itself")]
    SelfLoop(String),
    #[error("network is not connected")]
    Disconnected,
    #[error("network has no MMF source")]
    NoSource,
    #[error("network has no force-carrying air gap")]
    NoGap,
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("state vector length mismatch: {0}")]
    StateLength(String),
    #[error("magnetostatic solve failed: {0}")]
    Solve(#[from] crate::newton::NewtonError),
}
