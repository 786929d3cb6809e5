//! Storage reliability modeling with phase-type approximations.
//!
//! Weibull failure and repair laws are approximated by small absorbing
//! Markov chains ([`phfit`]), composed into per-disk local models and
//! symmetry-reduced system chains ([`raid`], [`ctmc`]), and solved
//! transiently for the probability of data loss. A discrete-event
//! simulator driven by the true Weibull clocks ([`sim`]) provides the
//! independent cross-check.
//!
//! All times are in hours.

pub mod ctmc;
pub mod dist;
pub mod error;
pub mod phfit;
pub mod raid;
pub mod series;
pub mod sim;

pub use error::{Error, Result};

/// Hours per (365-day) year.
pub const HOURS_PER_YEAR: f64 = 8760.0;
