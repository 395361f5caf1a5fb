//! Link-level simulation of an IRS-assisted multi-user MISO downlink.
//!
//! The crate covers the whole chain of one coherence block:
//!
//! - [`scenario`]: geometry, link budget and timing;
//! - [`channel`]: LoS BS-IRS matrices, correlated Rayleigh user links and cascades;
//! - [`estimation`]: the on/off training protocol and LMMSE estimates;
//! - [`beamforming`]: MRT, max-min SINR precoding and IRS phase design;
//! - [`evaluate`]: SINR/rate evaluation on true channels and Monte Carlo sweeps;
//! - [`experiments`]: the standard sweeps as CSV tables;
//! - [`validation`]: self-check suites for the estimators and optimizers.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod evaluate;
pub mod experiments;
pub mod linalg;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
