//! Distributionally robust moving horizon estimation for linear
//! time-varying systems, designed directly from noise samples.

pub mod baselines;
pub mod error;
pub mod l1_lp;
pub mod ltv_model;
pub mod noise_lab;
pub mod plant_sim;
pub mod sls_synthesis;

pub use error::{Error, Result};
