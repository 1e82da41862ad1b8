pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod learner;
pub mod loss;
pub mod privacy;
pub mod rng;
pub mod stream;
pub mod variance;

pub use error::{Error, Result};
