//! Simulation and analysis of far-field speckle in high-gain parametric
//! down-conversion.
//!
//! The crate is organized along the processing chain:
//!
//! * [`kernel`] closed-form biphoton physics and coherence-width predictors;
//! * [`simulator`] stochastic twin-beam fields, split-step propagation and
//!   CCD detection;
//! * [`analysis`] intensity fluctuations, cross/auto-correlation, speckle
//!   radius and the twin-beam difference variance;
//! * [`fitting`] gain-curve, shifted-linear and power-law fits;
//! * [`config`], [`frameio`] and [`sweep`] for configuration files, frame and
//!   CSV persistence, and parameter sweeps.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fft;
pub mod fitting;
pub mod frameio;
pub mod grid;
pub mod kernel;
pub mod seed;
pub mod simulator;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::ModeGrid;
