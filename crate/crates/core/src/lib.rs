pub mod electrical;
pub mod linalg;
pub mod magnetics;
pub mod material;
pub mod mechanics;
pub mod newton;
pub mod optimize;
pub mod scalar;
pub mod scenario;
pub mod solver;

/// Double-precision forms of the generic types.
pub type Network = magnetics::CircuitNetwork<f64>;
pub type Mechanics = mechanics::MechanicalConfig<f64>;
pub type Amplifier = electrical::AmplifierParams<f64>;
pub type Coil = electrical::CoilParams<f64>;
pub type Waveform = electrical::DriveWaveform<f64>;
pub type Table = material::TellinenTable<f64>;
pub type Permeability = material::PermeabilityFit<f64>;
pub type SimModel = solver::Model<f64>;
pub type Solver = solver::SolverConfig<f64>;
pub type State = solver::SimState<f64>;
pub type Series = solver::TimeSeries<f64>;
