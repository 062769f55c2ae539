//! Splitting trees and supercritical binary homogeneous Crump-Mode-Jagers
//! processes.
//!
//! The crate is split along the objects it computes:
//!
//! - [`model`]: lifetime laws `P_V` of individuals.
//! - [`levy`]: the Laplace exponent `psi` of the contour process, its
//!   derivative and the Malthusian parameter `alpha`.
//! - [`scale`]: a defective renewal solver, the scale function `W` on a grid
//!   and the closed-form moments built from it.
//! - [`simulate`]: exact simulation of the population counting process by a
//!   depth-first tree walk and by the contour process, plus residual
//!   lifetimes at a level.
//! - [`verify`]: goodness-of-fit tests and the Monte Carlo experiments.
//!
//! The analytic modules are generic over the scalar type through [`Real`];
//! the simulator and the statistics work in `f64`.

pub mod error;
pub mod levy;
pub mod model;
pub mod quad;
pub mod rng;
pub mod scale;
pub mod simulate;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use levy::LevyModel;
pub use model::LifespanDistribution;
pub use scale::{RenewalProblem, ScaleTable};

use std::fmt::{Debug, Display};

/// Floating point scalar the analytic machinery is written against.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type LifespanDistribution64 = model::LifespanDistribution<f64>;
pub type LifespanDistribution32 = model::LifespanDistribution<f32>;
pub type LevyModel64 = levy::LevyModel<f64>;
pub type LevyModel32 = levy::LevyModel<f32>;
pub type ScaleTable64 = scale::ScaleTable<f64>;
pub type ScaleTable32 = scale::ScaleTable<f32>;
