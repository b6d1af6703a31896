//! Online transfer identification of linear time-invariant systems.
//!
//! A short, non-informative data stream from an unknown plant is fused with
//! abundant data from a similar, known plant. At every step the identifier
//! produces the unique model consistent with the observed data whose behaviour
//! subspace is closest to the similar system's.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are the reference configuration.

pub mod bounds;
pub mod cli;
pub mod control;
pub mod datamat;
pub mod demos;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod scalar;
pub mod subspace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Subspace64 = subspace::Subspace<f64>;
pub type Subspace32 = subspace::Subspace<f32>;
pub type RankPolicy64 = subspace::RankPolicy<f64>;
pub type Trajectory64 = datamat::Trajectory<f64>;
pub type Trajectory32 = datamat::Trajectory<f32>;
pub type StackedData64 = datamat::StackedData<f64>;
pub type Snapshot64 = datamat::Snapshot<f64>;
pub type LinearModel64 = engine::LinearModel<f64>;
pub type LinearModel32 = engine::LinearModel<f32>;
pub type Identifier64 = engine::Identifier<f64>;
pub type Identifier32 = engine::Identifier<f32>;
pub type BoundReport64 = bounds::BoundReport<f64>;
