//! Steady-state radical-pair spin dynamics and compass precision bounds.
//!
//! A [`spin::SpinSystem`] describes two radicals with their hyperfine-coupled
//! nuclei. [`liouville`] solves for the continuous-generation steady state,
//! [`metrology`] turns it into Fisher information and yield-based variance,
//! and [`sweep`] runs orientation grids and nucleus-count scans.

pub mod check;
pub mod constants;
pub mod error;
pub mod liouville;
pub mod metrology;
pub mod spin;
pub mod sweep;

pub use error::{Error, Result};
