//! Simultaneous second-order correlation (Sg2) characterization of
//! single-photon sources.
//!
//! An unbalanced interferometer followed by two emulated two-photon
//! number-resolving detectors yields, from one data set, the source
//! brightness, its single-photon purity `g2_HBT[0]`, the two-photon
//! indistinguishability `C` and the photon-number distribution to third
//! order. This crate simulates such experiments and analyzes their click
//! streams:
//!
//! - [`fock`]: photon-number distributions and the source model
//! - [`circuit`]: the network unitary, permanents and multiphoton output
//!   probabilities
//! - [`simulate`]: the Monte Carlo experiment and the click-stream formats
//! - [`estimator`]: correlation histograms, the bunching fit, purity and
//!   indistinguishability extraction, Fock reconstruction and reports
//! - [`efficiency`]: variance comparisons against two-step methods
//! - [`fitter`]: the linear-optics model fit of the correlation matrix
//! - [`config`]: run-configuration files
//! - [`app`]: the command implementations behind the `sg2` binary
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod app;
pub mod circuit;
pub mod config;
pub mod efficiency;
pub mod error;
pub mod estimator;
pub mod fitter;
pub mod fock;
pub mod optimize;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!("sg2 ", env!("CARGO_PKG_VERSION"));
