//! Simulation and reduced-order analysis of a vibration-driven capsule with an
//! internal parametrically excited pendulum.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameters, state, the nondimensional map and the full equations of motion.
//! - [`integrator`]: fixed-step RK4 with event splitting at the damping switch, plus
//!   trajectory post-processing.
//! - [`slowflow`]: the (2:1) oscillatory slow flow, its fixed points and bifurcations.
//! - [`averaged`]: the (1:1) rotatory averaged flow and its phase-locked states.
//! - [`sweep`]: case studies, parameter sweeps and full-vs-reduced comparisons.

pub mod averaged;
pub mod error;
pub mod integrator;
pub mod model;
pub mod roots;
pub mod slowflow;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};

/// Crate version, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
