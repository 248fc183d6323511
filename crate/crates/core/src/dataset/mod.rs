//! Labeled (uplink, downlink) CSI sample sets.

mod format;
mod generate;

use std::path::Path;

use rand::seq::SliceRandom;

pub use format::{decode, encode, load, save, FORMAT_VERSION, MAGIC};
pub use generate::{
    generate_env_dataset, generate_env_dataset_at, generate_los_scalar_dataset, grid_positions,
    LosScalarConfig,
};

use crate::channel::{BandConfig, CsiMatrix};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    LosScalar,
    SyntheticEnv,
    #[default]
    Unspecified,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::LosScalar => "los_scalar",
            Scenario::SyntheticEnv => "synthetic_env",
            Scenario::Unspecified => "unspecified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiSample {
    pub ue_position: [f64; 3],
    pub h_ul: CsiMatrix,
    pub h_dl: CsiMatrix,
}

/// Homogeneous set of samples sharing one pair of band configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiDataset {
    band_ul: BandConfig,
    band_dl: BandConfig,
    antennas: usize,
    scenario: Scenario,
    /// Seed of the generating environment; not persisted on disk.
    env_seed: Option<u64>,
    samples: Vec<CsiSample>,
}

impl CsiDataset {
    pub fn new(
        band_ul: BandConfig,
        band_dl: BandConfig,
        antennas: usize,
        scenario: Scenario,
        samples: Vec<CsiSample>,
    ) -> Result<Self> {
        band_ul.validate()?;
        band_dl.validate()?;
        if band_ul.n_used != band_dl.n_used {
            return Err(Error::domain(format!(
                "uplink and downlink must use the same number of subcarriers ({} vs {})",
                band_ul.n_used, band_dl.n_used
            )));
        }
        if antennas == 0 {
            return Err(Error::domain("dataset needs at least one antenna"));
        }
        for (i, s) in samples.iter().enumerate() {
            for (name, h) in [("uplink", &s.h_ul), ("downlink", &s.h_dl)] {
                h.ensure_dims(antennas, band_ul.n_used).map_err(|e| {
                    Error::shape(format!("sample {i} {name}"), e.to_string())
                })?;
            }
        }
        Ok(CsiDataset {
            band_ul,
            band_dl,
            antennas,
            scenario,
            env_seed: None,
            samples,
        })
    }

    pub fn with_env_seed(mut self, seed: Option<u64>) -> Self {
        self.env_seed = seed;
        self
    }

    pub fn band_ul(&self) -> &BandConfig {
        &self.band_ul
    }

    pub fn band_dl(&self) -> &BandConfig {
        &self.band_dl
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.band_ul.n_used
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn env_seed(&self) -> Option<u64> {
        self.env_seed
    }

    /// `f_DL - f_UL` in Hz.
    pub fn band_separation(&self) -> f64 {
        self.band_dl.center_freq - self.band_ul.center_freq
    }

    pub fn samples(&self) -> &[CsiSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn uplink(&self) -> Vec<CsiMatrix> {
        self.samples.iter().map(|s| s.h_ul.clone()).collect()
    }

    pub fn downlink(&self) -> Vec<CsiMatrix> {
        self.samples.iter().map(|s| s.h_dl.clone()).collect()
    }

    /// Same metadata, selected samples.
    pub fn subset(&self, indices: &[usize]) -> CsiDataset {
        CsiDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    /// First `n` samples.
    pub fn take(&self, n: usize) -> CsiDataset {
        CsiDataset {
            samples: self.samples.iter().take(n).cloned().collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> CsiDataset {
        CsiDataset {
            band_ul: self.band_ul,
            band_dl: self.band_dl,
            antennas: self.antennas,
            scenario: self.scenario,
            env_seed: self.env_seed,
            samples: Vec::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load(path)
    }
}

/// Random disjoint partition. The train part receives
/// `floor(train_fraction * N)` samples.
pub fn split(ds: &CsiDataset, train_fraction: f64, seed: u64) -> Result<(CsiDataset, CsiDataset)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::domain(format!(
            "train fraction must lie in [0, 1], got {train_fraction}"
        )));
    }
    let (train_idx, test_idx) = split_indices(ds.len(), train_fraction, seed);
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_train = ((train_fraction * n as f64).floor() as usize).min(n);
    let test = idx.split_off(n_train);
    (idx, test)
}
