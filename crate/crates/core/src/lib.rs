//! Tropical spectral data and theta-function solutions of the box-ball system.

pub mod automata;
pub mod cli;
pub mod curve;
pub mod error;
pub mod exact;
pub mod pipeline;
pub mod puiseux;
pub mod spectral;
pub mod theta;

pub use error::{Error, Result};
