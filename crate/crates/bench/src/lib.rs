//! Benchmark harness comparing distributionally robust MHE with EKF and
//! quadratic MHE on a noisy Van der Pol oscillator.

pub mod config;
pub mod error;
pub mod matrix_io;
pub mod results;
pub mod runner;

pub use config::BenchConfig;
pub use error::{BenchError, Result};
pub use results::{emit_results, BenchResult};
pub use runner::{run_benchmark, sweep_epsilon};
