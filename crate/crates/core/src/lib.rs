//! Random walks on hyperbolic spaces: model geometries, boundary metrics,
//! measures on isometry groups and Monte-Carlo experiments on drift,
//! horofunction growth, stationary measures and large deviations.

pub mod analysis;
pub mod boundary;
pub mod cli;
pub mod error;
pub mod groups;
pub mod markov;
pub mod rng;
pub mod spaces;
pub mod stats;
pub mod walks;

pub use error::{HoroError, Result};
