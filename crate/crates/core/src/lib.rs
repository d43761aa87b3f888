//! Finite-truncation laboratory for supercyclicity of left and right
//! multiplication operators on operator ideals.

pub mod cli;
pub mod criteria;
pub mod error;
pub mod ideals;
pub mod operators;
pub mod probes;
pub mod sampling;
pub mod spaces;
pub mod tensor;

pub use error::{Error, Result};
// types from these appear throughout the public API
pub use nalgebra;
pub use num_complex;
