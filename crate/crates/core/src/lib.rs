//! Numerical laboratory for contractive barycentric maps on finite
//! probability spaces.

pub mod barycenters;
pub mod cli;
pub mod condexp;
pub mod ergodic;
pub mod error;
pub mod geometry;
pub mod ldp;
pub mod martingales;
pub mod measures;
pub mod rng;

pub use error::{Error, Result};
