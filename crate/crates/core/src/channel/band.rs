use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OFDM band description. Used subcarriers are the centered contiguous
/// `n_used` bins of the `n_sub`-point grid; bin `n_sub / 2` sits on the
/// carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// Carrier frequency in Hz.
    pub center_freq: f64,
    /// Sampling bandwidth in Hz.
    pub bandwidth: f64,
    pub n_sub: usize,
    pub n_used: usize,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
}

impl BandConfig {
    pub const DEFAULT_N_SUB: usize = 1024;
    pub const DEFAULT_N_USED: usize = 922;
    pub const DEFAULT_CP_LEN: usize = 256;

    pub fn new(
        center_freq: f64,
        bandwidth: f64,
        n_sub: usize,
        n_used: usize,
        cp_len: usize,
    ) -> Result<Self> {
        let band = BandConfig {
            center_freq,
            bandwidth,
            n_sub,
            n_used,
            cp_len,
        };
        band.validate()?;
        Ok(band)
    }

    /// 1024-point grid with 922 used bins and a 256-sample CP.
    pub fn ofdm(center_freq: f64, bandwidth: f64) -> Result<Self> {
        Self::new(
            center_freq,
            bandwidth,
            Self::DEFAULT_N_SUB,
            Self::DEFAULT_N_USED,
            Self::DEFAULT_CP_LEN,
        )
    }

    /// Single-coefficient band used by the flat line-of-sight scenario.
    pub fn scalar(center_freq: f64, bandwidth: f64) -> Result<Self> {
        Self::new(center_freq, bandwidth, 1, 1, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.center_freq.is_finite() && self.center_freq > self.bandwidth / 2.0) {
            return Err(Error::domain(format!(
                "center frequency {} must exceed half the bandwidth {}",
                self.center_freq, self.bandwidth
            )));
        }
        if self.n_sub == 0 || self.n_used == 0 || self.n_used > self.n_sub {
            return Err(Error::domain(format!(
                "need 0 < n_used <= n_sub, got n_used={} n_sub={}",
                self.n_used, self.n_sub
            )));
        }
        Ok(())
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.n_sub as f64
    }

    /// Index of the first used bin in the `n_sub` grid.
    pub fn first_used_bin(&self) -> usize {
        (self.n_sub - self.n_used).div_ceil(2)
    }

    /// Grid bins occupied by the used subcarriers, in ascending order.
    pub fn used_bins(&self) -> std::ops::Range<usize> {
        let first = self.first_used_bin();
        first..first + self.n_used
    }

    /// Signed DFT index of grid bin `bin` relative to the carrier.
    pub fn bin_index(&self, bin: usize) -> i64 {
        bin as i64 - (self.n_sub / 2) as i64
    }

    /// Baseband frequency offsets (Hz) of the used subcarriers.
    pub fn used_offsets(&self) -> Vec<f64> {
        let df = self.subcarrier_spacing();
        self.used_bins()
            .map(|b| self.bin_index(b) as f64 * df)
            .collect()
    }

    /// Absolute frequencies (Hz) of the used subcarriers.
    pub fn used_frequencies(&self) -> Vec<f64> {
        self.used_offsets()
            .into_iter()
            .map(|f| self.center_freq + f)
            .collect()
    }

    pub fn with_center(&self, center_freq: f64) -> Result<Self> {
        Self::new(
            center_freq,
            self.bandwidth,
            self.n_sub,
            self.n_used,
            self.cp_len,
        )
    }
}
