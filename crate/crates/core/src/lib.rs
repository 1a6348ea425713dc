//! Communication-round lower-bound laboratory for distributed convex
//! optimization under a span-restricted machine model.
//!
//! The crate builds exact hard instances, simulates machines that may only
//! generate points inside the span of what they have seen, runs distributed
//! solvers against that simulator, and evaluates closed-form round bounds.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod instances;
pub mod numkit;
pub mod oracle;
pub mod solvers;

pub use error::{Error, Result};
