//! Three-level kinetic laboratory: hard-sphere particles, the linearized
//! Boltzmann equation with hard-sphere kernel, and the Stokes-Fourier limit.

pub mod error;
pub mod hydro;
pub mod kinetic;
pub mod md;
pub mod scaling;
pub mod series;
pub mod stats;
pub mod velocity;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
