//! Simulation of single-photon storage and retrieval in an EIT cold-atom
//! memory.
//!
//! * [`medium`]: steady-state susceptibility, transmission spectra and the
//!   fits built on them.
//! * [`propagation`]: the time-domain Maxwell–Bloch solver, with a
//!   frequency-domain cross-check.
//! * [`protocol`]: storage schedules plus efficiency and likeness metrics.
//! * [`optimizer`]: iterative time-reversal waveform optimization.
//! * [`photonstats`]: Monte Carlo photon counting and loss budgets.
//! * [`config`] and [`runner`]: JSON run configurations and scenario execution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod error;
pub mod io;
pub mod medium;
pub mod numeric;
pub mod optimizer;
pub mod photonstats;
pub mod presets;
pub mod propagation;
pub mod protocol;
pub mod runner;
pub mod waveform;

pub use control::{ControlProfile, RampShape, SwitchEvent};
pub use error::{Error, Result};
pub use medium::{MediumParams, Spectrum};
pub use propagation::MediumState;
pub use waveform::{TimeGrid, Waveform};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
