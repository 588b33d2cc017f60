//! Driver for the exterior-time-scaling hydrogen solver: run configuration,
//! time loop with observable output, checkpoints and diagnostics.

pub mod checkpoint;
pub mod config;
pub mod driver;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use driver::{ground, resume, run, scan, RunMetadata, Simulation};
pub use error::{DriverError, ExitCode, Result};
