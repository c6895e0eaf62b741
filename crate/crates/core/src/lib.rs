//! Generalized first-order Kuramoto networks.
//!
//! * [`model`]: system parameters, vector field, order parameter, reduced system
//! * [`integrator`]: fixed-step RK4 and adaptive Dormand–Prince trajectories
//! * [`analysis`]: finite-horizon synchronization classifiers and the energy identity
//! * [`thresholds`]: closed-form critical coupling and order-parameter bounds
//! * [`equilibria`]: multistart Newton search for phase-locked configurations
//! * [`runner`]: seeded experiments, sweeps, file formats and the CLI

pub mod analysis;
pub mod equilibria;
pub mod error;
pub mod integrator;
pub mod model;
pub mod par;
pub mod runner;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{order_parameter, OrderParameter, OscillatorSystem};
pub use par::Execution;
