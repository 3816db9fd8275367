//! Parameter identification for LFT-structured descriptor systems driven by
//! an autonomous input generator and observed at slow, non-uniform instants.
//!
//! The estimator works in two least-squares steps: first the transfer matrix
//! values at the generator eigenvalues are estimated from the sampled
//! outputs, then the parameters are recovered from those values.

pub mod error;
pub mod igs;
pub mod model;
pub mod numerics;
pub mod reference;
pub mod response;
pub mod estimation;
pub mod experiments;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
