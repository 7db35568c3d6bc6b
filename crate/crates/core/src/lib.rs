pub mod error;
pub mod estimators;
pub mod harness;
pub mod heatbench;
pub mod pce;
pub mod sampling;
pub mod taylor;

pub use error::{Error, Result};
