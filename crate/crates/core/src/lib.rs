//! Desk-scale laboratory for traffic-signal cycle control under varying
//! intervention frequencies: a deterministic point-queue intersection
//! simulator, a from-scratch PPO trainer with the *adjust all phases* action
//! design under three actor/critic topologies, classical baselines, and the
//! efficiency/steadiness evaluation harness.

pub mod agent;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod scenario;
pub mod signal;
pub mod sim;
pub mod train;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type of the simulation pipeline. The numeric core is generic over
/// [`Scalar`]; everything that touches the simulator or files is pinned here.
pub type Real = f64;

/// Observation matrix at pipeline precision.
pub type Obs = agent::Observation<Real>;
/// Network-input matrix at pipeline precision.
pub type NetInput = agent::ObsMatrix<Real>;
/// Policy/value network at pipeline precision.
pub type Net = nn::PolicyNet<Real>;
