pub mod asclt;
pub mod cli;
pub mod covariance;
pub mod dimension;
pub mod error;
pub mod exec;
pub mod format;
pub mod holder;
pub mod measure;
pub mod process;
pub mod quad;
pub mod rng;
pub mod shadowing;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
