//! Numerical laboratory for the q^vol and shift-mixed q^vol measures on
//! lozenge tilings of an infinite cylinder.

pub mod error;
pub mod kernel;
pub mod limit_shape;
pub mod mcmc;
pub mod moments;
pub mod partitions;
pub mod rows;
pub mod special;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
pub use partitions::{CylindricConfig, ModularData, Partition};
