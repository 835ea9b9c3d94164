//! Survival modelling over EHR encounter sequences.
//!
//! The pipeline: tokenize patient histories ([`data`]), embed and encode
//! them with a small transformer ([`model`]), integrate a learned hazard
//! ODE into a survival curve ([`ode`]), train under a censored likelihood
//! with an explicit calibration regularizer ([`loss`], [`train`]), and
//! evaluate with censoring-aware metrics ([`metrics`]) against a Cox
//! baseline ([`cph`]). [`synth`] generates cohorts with known hazard
//! structure so every stage can be checked against ground truth, and
//! [`explain`] attributes predicted risk back to individual encounters.

pub mod checkpoint;
pub mod config;
pub mod cph;
pub mod data;
pub mod error;
pub mod explain;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod synth;
pub mod tape;
pub mod train;

pub use error::{Error, Result};
