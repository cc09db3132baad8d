//! Bernstein–von Mises diagnostics for adaptively collected data.

pub mod env;
pub mod error;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
pub use rng::RandomSource;
pub use trajectory::{append_step, Covariate, GramAccumulator, Trajectory};
