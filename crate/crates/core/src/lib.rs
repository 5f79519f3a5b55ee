//! Decomposition and forecasting of daily count series: linear trend,
//! phase-mean cycles found from the spectrum, and an exact-likelihood
//! ARMA model on what remains.

pub mod arma;
pub mod cycles;
pub mod error;
pub mod ingest;
mod linalg;
pub mod pipeline;
pub mod sim;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
