pub mod channel;
pub mod commands;
pub mod config;
pub mod deviation;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod optimizer;
pub mod stats;

pub use error::{Error, Result};
