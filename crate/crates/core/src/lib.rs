//! Certification of Gaussian-smoothed classifiers that carry an uncertainty
//! class.
//!
//! The crate estimates three certified ℓ₂ radii around an input:
//!
//! * `R`: the smoothed prediction stays the same,
//! * `R_CC`: the smoothed prediction stays the same *and* confident,
//! * `R_NCL`: the smoothed prediction never switches to a different
//!   confident label (it may become uncertain).
//!
//! Everything here is pure computation over `alloc`. I/O and the command line
//! live in the `certsmooth` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod certifier;
pub mod classifier;
mod error;
pub mod noise;
pub mod oracle;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
