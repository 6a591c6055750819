//! Spatial eviction-risk simulation under Mallows-distributed rankings, with
//! targeted and untargeted canvassing policies compared through RENT.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod policy;
pub mod ranking;
pub mod seed;
pub mod spatial;

pub use error::{Error, Result};
