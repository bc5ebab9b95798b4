pub mod domain;
pub mod econ;
pub mod error;
pub mod frontier;
pub mod hedonic;
pub mod stats;
pub mod synth;
pub mod tax;
pub mod variance;

pub use error::{Error, Result};
