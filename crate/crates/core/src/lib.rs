#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Simulation engine for a cold thermal-energy-storage tank filled with
//! spherical PCM capsules, cooled by an evaporating refrigerant and
//! discharged by a secondary glycol loop.
//!
//! Two capsule models share the same fluid and pipe submodels:
//!
//! * [`continuous`]: a single moving solid/liquid front per capsule. Valid
//!   for complete charge or discharge cycles only.
//! * [`discrete`]: equal-mass spherical layers tracked by specific
//!   enthalpy. Handles arbitrary partial sequences.
//!
//! [`engine`] sequences scenarios and holds the numerical kernels, and
//! [`cli`] covers configuration and file output.

pub mod cli;
pub mod continuous;
pub mod correlations;
pub mod discrete;
pub mod engine;
pub mod error;
pub mod network;
pub mod properties;
pub mod system;

pub use error::{Error, Result};
