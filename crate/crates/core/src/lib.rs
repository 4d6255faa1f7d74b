//! Spin phases on a mesoscopic ring and the generalized Faraday law.
//!
//! The crate is layered bottom-up: [`spinor`] holds the Pauli algebra,
//! [`fields`] the scenario definitions and drives, [`invariant`] the
//! closed-form invariant-operator solutions, [`propagator`] the numerical
//! evolution used as their oracle, and [`classical`] the rest-frame spin
//! picture with the motive-force comparator. [`config`] and [`runner`] back
//! the command-line tool; [`checks`] is the acceptance suite shared by the
//! tests and the `check` verb.

pub mod checks;
pub mod classical;
pub mod config;
pub mod error;
pub mod fields;
pub mod format;
pub mod invariant;
pub mod propagator;
pub mod runner;
pub mod spinor;

pub use error::{Error, Result};
