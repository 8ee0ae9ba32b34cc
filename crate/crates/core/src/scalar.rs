//! Scalar abstraction for the numeric core.
//!
//! Everything that is pure math (the tensor engine, GAE, PPO losses, the
//! evaluation metrics, Webster timing) is generic over [`Scalar`] so it can
//! run at `f32` or `f64`. The simulation pipeline itself is pinned to
//! [`crate::Real`] (`f64`): gradient checks and byte-reproducible logs
//! outrank speed at desk scale.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric core: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used at the simulator boundary.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to any Scalar")
    }

    /// Lossless-enough conversion back to `f64` for logging.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("any Scalar converts to f64")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
