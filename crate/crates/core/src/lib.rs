pub mod energy;
pub mod error;
pub mod field;
pub mod harness;
pub mod initdata;
pub mod plot;
pub mod potential;
mod quadrature;
pub mod regimes;
pub mod stepper;
pub mod variational;

pub use error::{Error, Result};
