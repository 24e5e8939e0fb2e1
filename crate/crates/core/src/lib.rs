//! Stationary entanglement in two optomechanical cavities coupled by photon
//! hopping.
//!
//! The pipeline runs from cavity parameters to the stationary mean fields
//! ([`steady_state`]), the linearized drift and diffusion matrices
//! ([`dynamics`]), the stationary covariance matrix ([`lyapunov`]) and the
//! logarithmic negativity of every two-mode bipartition ([`entanglement`]).
//! [`sweep`] evaluates the pipeline over parameter grids.
//!
//! Everything is generic over a [`Real`] scalar; the `f64` aliases below are
//! what the command-line front end uses.

pub mod dynamics;
pub mod entanglement;
pub mod lyapunov;
pub mod model;
pub mod scalar;
pub mod steady_state;
pub mod sweep;

pub use scalar::Real;

pub type PhysicalCavityParams = model::PhysicalCavityParams<f64>;
pub type PhysicalSystem = model::PhysicalSystem<f64>;
pub type EffectiveParams = model::EffectiveParams<f64>;
pub type ModelInput = model::ModelInput<f64>;
pub type SteadyState = steady_state::SteadyState<f64>;
pub type DriftMatrix = dynamics::DriftMatrix<f64>;
pub type DiffusionMatrix = dynamics::DiffusionMatrix<f64>;
pub type StabilityReport = dynamics::StabilityReport<f64>;
pub type CovarianceMatrix = lyapunov::CovarianceMatrix<f64>;
pub type ReducedCM = entanglement::ReducedCM<f64>;
pub type EntanglementResult = entanglement::EntanglementResult<f64>;
pub type SweepSpec = sweep::SweepSpec<f64>;
pub type SweepRecord = sweep::SweepRecord<f64>;
