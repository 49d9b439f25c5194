//! Random tessellation processes: priors over hierarchical non-axis-aligned
//! partitions, sequential Monte Carlo posterior inference, and random
//! tessellation forests for classification.

pub mod data;
pub mod forest;
pub mod likelihood;
pub mod measure;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod smc;
pub mod stats;
pub mod tessellation;

pub use error::{Error, Result};
