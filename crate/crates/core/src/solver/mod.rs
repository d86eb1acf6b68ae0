//! Coupled transient simulation of coil, magnetic network and armature.
//!
//! Every step is a backward-Euler solve of the full system (position,
//! velocity, coil current, element fluxes and node potentials) by damped
//! Newton iteration. Step size follows a step-doubling error estimate and
//! the accepted value is the Richardson combination of the full step and
//! the two half steps.

mod energy;
mod integrate;
mod series;
mod system;

use serde::{Deserialize, Serialize};

use crate::electrical::{CoilParams, DriveMode, DriveWaveform, ElectricalError};
use crate::magnetics::{CircuitNetwork, NetworkError};
use crate::material::Direction;
use crate::mechanics::{MechanicalConfig, MechanicsError};
use crate::scalar::{lit, Scalar};

pub use energy::{energy_ledger, EnergyLedger};
pub use integrate::{integrate, integrate_until, Integration, IntegrationStats};
pub use series::{csv_metadata, unit_of, SeriesError, TimeSeries};
pub use system::step;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("step size {dt:.3e} s fell below the minimum at t = {t:.6e} s")]
    StepTooSmall { t: f64, dt: f64 },
    #[error("Newton iteration failed at t = {t:.6e} s: {source}")]
    Newton {
        t: f64,
        #[source]
        source: crate::newton::NewtonError,
    },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error(transparent)]
    Electrical(#[from] ElectricalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig<T> {
    pub rel_tol: T,
    pub abs_tol_x: T,
    pub abs_tol_v: T,
    pub abs_tol_i: T,
    pub abs_tol_flux: T,
    pub dt_init: T,
    pub dt_min: T,
    pub dt_max: T,
    pub newton_max_iter: usize,
    /// Spacing of the dense output in s.
    pub output_stride: T,
    /// Accept the Richardson-extrapolated value instead of the two half
    /// steps.
    pub extrapolate: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: lit(1e-5),
            abs_tol_x: lit(1e-10),
            abs_tol_v: lit(1e-6),
            abs_tol_i: lit(1e-6),
            abs_tol_flux: lit(1e-12),
            dt_init: lit(1e-8),
            dt_min: lit(1e-15),
            dt_max: lit(1e-5),
            newton_max_iter: 30,
            output_stride: lit(1e-6),
            extrapolate: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.rel_tol)
            && pos(self.abs_tol_x)
            && pos(self.abs_tol_v)
            && pos(self.abs_tol_i)
            && pos(self.abs_tol_flux))
        {
            return Err(SolverError::Config("tolerances must be positive".into()));
        }
        if !(pos(self.dt_min) && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(SolverError::Config("need 0 < dt_min ≤ dt_init ≤ dt_max".into()));
        }
        if !pos(self.output_stride) {
            return Err(SolverError::Config("output stride must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(SolverError::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Same settings with all tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: T) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol_x: self.abs_tol_x * factor,
            abs_tol_v: self.abs_tol_v * factor,
            abs_tol_i: self.abs_tol_i * factor,
            abs_tol_flux: self.abs_tol_flux * factor,
            ..*self
        }
    }
}

/// Whether the armature moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion<T> {
    Free,
    /// Held at the given gap.
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialConditions<T> {
    /// Start position; defaults to resting against the open stop.
    pub x: Option<T>,
    pub v: T,
    pub current: T,
}

/// Everything a transient run needs.
#[derive(Debug, Clone)]
pub struct Model<T> {
    pub network: CircuitNetwork<T>,
    pub mechanics: MechanicalConfig<T>,
    pub coil: CoilParams<T>,
    pub drive: DriveMode<T>,
    pub waveform: DriveWaveform<T>,
    pub motion: Motion<T>,
    pub initial: InitialConditions<T>,
}

impl<T: Scalar> Model<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        self.mechanics.validate()?;
        self.coil.validate()?;
        self.waveform.validate()?;
        if let DriveMode::Amplifier(p) = &self.drive {
            p.validate()?;
        }
        for &e in &self.network.source_elements() {
            if let crate::magnetics::MagneticElement::MmfSource { turns } = self.network.branches()[e].element {
                if turns != self.coil.turns {
                    return Err(SolverError::Config(format!(
                        "source '{}' has {turns} turns but the coil has {}",
                        self.network.branches()[e].name,
                        self.coil.turns
                    )));
                }
            }
        }
        if self.motion == Motion::Free {
            self.network.require_force_gap()?;
        }
        Ok(())
    }
}

/// Accumulated energy flows since the start of a run, in J.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyFlows<T> {
    /// Electrical energy delivered to the coil terminals.
    pub input: T,
    pub resistive: T,
    pub eddy: T,
    pub hysteresis: T,
    /// Energy dissipated by stopper damping.
    pub contact: T,
}

/// Complete state after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub x: T,
    pub v: T,
    pub i: T,
    /// Flux per network element.
    pub fluxes: Vec<T>,
    /// Magnetic potential per node, reference node first.
    pub potentials: Vec<T>,
    /// Field and polarization per hysteresis slot.
    pub h: Vec<T>,
    pub j: Vec<T>,
    /// Last direction of the field change per hysteresis slot.
    pub direction: Vec<Direction>,
    /// Closing force of the gaps, in N.
    pub force: T,
    /// Terminal voltage of the coil over the last step.
    pub voltage: T,
    pub energy: EnergyFlows<T>,
}
