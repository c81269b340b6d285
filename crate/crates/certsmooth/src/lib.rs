//! File formats and dataset runs built on `certsmooth-core`.

pub mod config;
pub mod dataset;
mod error;
pub mod model;
pub mod output;
pub mod pool;
pub mod records;
pub mod run;

pub use certsmooth_core as core;
pub use error::{Error, Result};
