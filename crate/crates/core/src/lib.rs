//! Convolutional multi-agent reinforcement learning for distributed control of
//! PDEs on periodic and bounded domains.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases below pin
//! the common `f64` instantiation.

pub mod baselines;
pub mod checks;
pub mod config;
pub mod conv;
pub mod ddpg;
pub mod field;
pub mod nn;
pub mod pde;
pub mod rng;
pub mod scalar;
pub mod train;

pub type Field = field::Field<f64>;
pub type SensorArray = conv::SensorArray<f64>;
pub type ActuatorArray = conv::ActuatorArray<f64>;
pub type Observations = conv::Observations<f64>;
pub type Mlp = nn::Mlp<f64>;
pub type DdpgAgent = ddpg::DdpgAgent<f64>;
pub type ReplayBuffer = ddpg::ReplayBuffer<f64>;
pub type Transition = ddpg::Transition<f64>;
pub type KsSolver = pde::KsSolver<f64>;
pub type KellerSegelSolver = pde::KellerSegelSolver<f64>;
pub type Vorticity2dSolver = pde::Vorticity2dSolver<f64>;
pub type Experiment = train::Experiment<f64>;
pub type EpisodeLog = train::EpisodeLog<f64>;
