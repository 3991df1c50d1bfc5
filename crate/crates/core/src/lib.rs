pub mod cli;
pub mod covariance;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod linalg;
pub mod market;
pub mod reconcile;
pub mod simulation;

pub use error::{Error, Result};
