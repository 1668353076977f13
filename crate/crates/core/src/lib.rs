pub mod compound_poisson;
pub mod error;
pub mod exec;
pub mod group;
pub mod harness;
pub mod limit_engine;
pub mod mixing;
pub mod rng;
pub mod simulators;

pub use error::{Error, Result};
