//! Named switching scenarios, their configuration files and metrics.

mod config;
pub mod metrics;
mod run;

pub use config::{
    DriveKind, ElectricalSection, LoadedConfig, MetricOptions, NetworkSection, RunSection, ScenarioConfig,
    ScenarioKind, SweepSpec,
};
pub use metrics::{GapThresholds, RunMetrics};
pub use run::{
    build_model, execute_plans, load_scenario_material, plan_scenario, run_scenario, RunOutput, RunPlan,
    ScenarioOutput, Summary,
};

use crate::electrical::ElectricalError;
use crate::magnetics::NetworkError;
use crate::material::MaterialError;
use crate::solver::{SeriesError, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Electrical(#[from] ElectricalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl ScenarioError {
    /// Failures of the integration itself, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Self::Solver(SolverError::StepTooSmall { .. } | SolverError::Newton { .. })
                | Self::Network(NetworkError::Solve(_))
        )
    }
}
