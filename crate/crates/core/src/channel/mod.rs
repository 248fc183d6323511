//! Physical channel generation.
//!
//! A [`PathSet`] describes the multipath impulse response as a list of
//! frequency-independent gains and delays. The same path set is evaluated on
//! any carrier, either as discrete-time baseband taps ([`to_baseband`]) or as
//! an exact OFDM frequency response ([`freq_response`]). This shared physical
//! description is what links the uplink and downlink bands.

mod band;
mod csi;
mod env;
mod noise;
mod paths;

pub use band::BandConfig;
pub use csi::CsiMatrix;
pub use env::{AreaBounds, EnvironmentConfig, Scatterer, ScattererEnvironment};
pub use noise::{add_awgn, add_awgn_with, awgn_sigma2};
pub use paths::{
    freq_response, los_coefficient, sinc, to_baseband, BasebandTaps, Path, PathSet, TapOptions,
};
