//! Benchmark laboratory for the asteroid routing problem.

pub mod error;
pub mod harness;
pub mod inner;
pub mod lambert;
pub mod optimizers;
pub mod orbits;
pub mod permutation;
pub mod problem;

pub use error::{Error, Result};
