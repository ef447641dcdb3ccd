//! Residue currents of weakly holomorphic tuples on singular spaces presented by normalization charts.

pub mod algebra;
pub mod bm;
pub mod ch;
pub mod currents;
pub mod error;
pub mod gbasis;
pub mod pl;
pub mod space;
pub mod toric;

pub use error::{Error, Result};
