//! Numerical laboratory for the exterior free boundary problem
//! `min ∫|∇v|^p + Per({v > 0})` with `v = 1` on a compact set `K`.

pub mod error;
pub mod fbmin;
pub mod geomlab;
pub mod grid;
pub mod plap;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
