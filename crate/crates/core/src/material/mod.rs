//! Soft-magnetic material description: analytic permeability, the
//! Tellinen hysteresis table and its preparation from measured loops.

mod curve;
pub mod io;
mod loop_prep;
mod permeability;
pub mod synthetic;
mod tellinen;

pub use curve::{BHCurve, CurveKind};
pub use loop_prep::{
    build_table, differentiate_loop, integrate_derivative_loop, select_grid, split_loop,
    symmetrize_loop,
};
pub use permeability::{
    eval_mu_hat, fit_permeability, measured_permeability, synthesize_initial_curve, FitOptions,
    FitReport, PermeabilityFit,
};
pub use tellinen::{
    advance_state, initial_b_curve, reconstruct_initial_curve, tellinen_slope, BranchSample,
    Direction, SlopeEval, TellinenTable,
};

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaterialError {
    #[error("curve has no samples")]
    EmptyCurve,
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("|J| = {j} T at index {index} exceeds the sanity bound")]
    PolarizationOutOfBound { index: usize, j: f64 },
    #[error("duplicate field value at sorted index {index}")]
    DuplicateField { index: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("branches do not share an H range containing zero")]
    DisjointRanges,
    #[error("data is not a falling-then-rising loop traversal")]
    NotALoop,
    #[error("fit underdetermined: {points} points left after exclusion (need 5)")]
    FitUnderdetermined { points: usize },
    #[error("invalid grid count {count}: {reason}")]
    GridCount { count: usize, reason: String },
    #[error("invalid hysteresis table: {0}")]
    InvalidTable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Electrical resistivity in Ω·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resistivity<T>(T);

impl<T: Scalar> Resistivity<T> {
    pub fn new(rho: T) -> Result<Self, MaterialError> {
        if rho > T::zero() && rho.is_finite() {
            Ok(Self(rho))
        } else {
            Err(MaterialError::InvalidParameter("resistivity must be positive".into()))
        }
    }

    /// Four-terminal measurement on X6CrMoS17: 0.774 µΩ·m.
    pub fn x6crmos17() -> Self {
        Self(lit(0.774e-6))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Everything the network elements need to know about the iron.
#[derive(Debug, Clone)]
pub struct Material<T> {
    pub permeability: PermeabilityFit<T>,
    pub resistivity: Resistivity<T>,
    pub hysteresis: Option<std::sync::Arc<TellinenTable<T>>>,
}

impl<T: Scalar> Material<T> {
    /// X6CrMoS17 with the published permeability fit, measured resistivity
    /// and a 61-point table prepared from the synthetic stand-in loop.
    pub fn x6crmos17() -> Self {
        let table = synthetic::SyntheticLoop::default()
            .branches::<T>()
            .and_then(|(f, r)| build_table(&f, &r, 61))
            .expect("built-in loop is valid");
        Self {
            permeability: PermeabilityFit::x6crmos17(),
            resistivity: Resistivity::x6crmos17(),
            hysteresis: Some(std::sync::Arc::new(table)),
        }
    }
}
