//! Testbench for predicting downlink CSI on one band from uplink CSI observed
//! on an adjacent band.
//!
//! The crate is organized along the processing chain:
//!
//! * [`channel`] builds multipath channels from a fixed scatterer geometry and
//!   evaluates them as discrete-time taps or OFDM frequency responses.
//! * [`dataset`] produces labeled (uplink, downlink) sample sets and persists
//!   them in the `FDDCSI01` binary format.
//! * [`estimators`] holds the closed-form line-of-sight extrapolator and the
//!   Wiener (LMMSE) filter.
//! * [`nn`] is a small self-contained network library with exact gradients,
//!   the three reference architectures and the training loop.
//! * [`metrics`] scores predictions with NMSE, correlation coefficient and
//!   Monte-Carlo QPSK bit-error rate.
//! * [`precoding`] evaluates multi-user MRT / ZF downlink sum-rate.
//! * [`predictor`] puts all estimators behind one trait.
//! * [`cli`] is the experiment runner behind the `fddpred` binary.

pub mod channel;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod metrics;
pub mod nn;
pub mod precoding;
pub mod predictor;
pub mod rng;

pub use channel::{BandConfig, CsiMatrix, PathSet};
pub use dataset::{CsiDataset, CsiSample};
pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
