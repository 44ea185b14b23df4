//! Convergence sweeps, report files and configuration for the splitting
//! integrators of `splitting-core`.

pub mod config;
pub mod dump;
pub mod error;
pub mod report;
pub mod selftest;
pub mod sweep;

pub use error::{Error, Result};
pub use report::{ConvergenceReport, Row, Status};
pub use sweep::{run_convergence, Sweep, SweepOptions};
