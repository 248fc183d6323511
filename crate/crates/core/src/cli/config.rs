//! JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{BandConfig, EnvironmentConfig};
use crate::dataset::LosScalarConfig;
use crate::error::{Error, Result};
use crate::metrics::BerMode;
use crate::precoding::PrecoderKind;
use crate::predictor::NnSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    LosScalar,
    SyntheticEnv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    #[default]
    Analytical,
    WienerGlobal,
    WienerMatched,
    Nn,
    Identity,
    Random,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Analytical => "analytical",
            PredictorKind::WienerGlobal => "wiener_global",
            PredictorKind::WienerMatched => "wiener_matched",
            PredictorKind::Nn => "nn",
            PredictorKind::Identity => "identity",
            PredictorKind::Random => "random",
        }
    }
}

/// Uplink / downlink band parameters. The scalar LoS scenario uses only the
/// carriers and the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSettings {
    pub f_ul: f64,
    pub f_dl: f64,
    pub bandwidth: f64,
    pub n_sub: usize,
    pub n_used: usize,
    pub cp_len: usize,
}

impl Default for BandSettings {
    fn default() -> Self {
        BandSettings {
            f_ul: 1.25e9,
            f_dl: 1.275e9,
            bandwidth: 20e6,
            n_sub: 1024,
            n_used: 922,
            cp_len: 256,
        }
    }
}

impl BandSettings {
    pub fn ofdm_bands(&self) -> Result<(BandConfig, BandConfig)> {
        let make = |fc| BandConfig::new(fc, self.bandwidth, self.n_sub, self.n_used, self.cp_len);
        Ok((make(self.f_ul)?, make(self.f_dl)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LosSettings {
    pub radius_min: f64,
    pub radius_max: f64,
    pub beta: f64,
}

impl Default for LosSettings {
    fn default() -> Self {
        let d = LosScalarConfig::default();
        LosSettings {
            radius_min: d.radius_min,
            radius_max: d.radius_max,
            beta: d.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WienerSettings {
    /// SNR (dB) that sets the filter's noise variance relative to the mean
    /// training uplink power. Falls back to `metrics.test_snr_db`, then to a
    /// noiseless fit.
    pub fit_snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BerSettings {
    pub snr_grid_db: Vec<f64>,
    pub n_bits: u64,
    pub mode: BerMode,
}

impl Default for BerSettings {
    fn default() -> Self {
        BerSettings {
            snr_grid_db: (0..=12).map(f64::from).collect(),
            n_bits: 1_000_000,
            mode: BerMode::Equalize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SumRateSettings {
    pub precoder: PrecoderKind,
    pub users: usize,
    /// SNR relative to the mean per-entry downlink power.
    pub snr_db: f64,
    pub draws: usize,
}

impl Default for SumRateSettings {
    fn default() -> Self {
        SumRateSettings {
            precoder: PrecoderKind::Mrt,
            users: 2,
            snr_db: 10.0,
            draws: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSettings {
    /// Noise added to the test uplink before prediction, dB.
    pub test_snr_db: Option<f64>,
    pub ber: Option<BerSettings>,
    pub sum_rate: Option<SumRateSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// Band separations `f_dl - f_ul` for `fig3` and `fig4`, Hz.
    pub separations_hz: Vec<f64>,
    /// Training-set sizes for `fig4` and `nmse_vs_samples`.
    pub training_sizes: Vec<usize>,
    /// Array sizes for `fig9` and `sumrate_vs_antennas`.
    pub antennas: Vec<usize>,
    /// Predictors compared by `fig3`.
    pub predictors: Vec<PredictorKind>,
    pub snr_grid_db: Vec<f64>,
    pub n_bits: u64,
    /// Channel samples per array size in `fig9`.
    pub samples_per_point: usize,
    /// Test samples held out by `fig4` and `nmse_vs_samples`.
    pub test_samples: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            separations_hz: vec![1e6, 25e6],
            training_sizes: vec![100, 200, 400, 600, 1000, 2000],
            antennas: vec![1, 2, 4, 8],
            predictors: vec![PredictorKind::Analytical, PredictorKind::WienerMatched, PredictorKind::Nn],
            snr_grid_db: (0..=24).map(|i| f64::from(i) * 0.5).collect(),
            n_bits: 1_000_000,
            samples_per_point: 20,
            test_samples: 500,
        }
    }
}

/// Complete description of one experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub band: BandSettings,
    /// Base-station antennas; overrides `environment.antennas`.
    pub antennas: usize,
    pub n_samples: usize,
    pub train_fraction: f64,
    pub los: LosSettings,
    /// Scatterer geometry; `reference_freq` is taken from `band.f_ul`.
    pub environment: EnvironmentConfig,
    pub predictor: PredictorKind,
    pub wiener: WienerSettings,
    pub nn: NnSettings,
    pub metrics: MetricSettings,
    pub sweep: SweepSettings,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioKind::LosScalar,
            band: BandSettings::default(),
            antennas: 1,
            n_samples: 5000,
            train_fraction: 0.9,
            los: LosSettings::default(),
            environment: EnvironmentConfig::default(),
            predictor: PredictorKind::Analytical,
            wiener: WienerSettings::default(),
            nn: NnSettings::default(),
            metrics: MetricSettings::default(),
            sweep: SweepSettings::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return bad(format!("train_fraction must lie in [0, 1], got {}", self.train_fraction));
        }
        if self.antennas == 0 {
            return bad("antennas must be at least 1".into());
        }
        if self.scenario == ScenarioKind::LosScalar && self.antennas != 1 {
            return bad("the los_scalar scenario has a single antenna".into());
        }
        if self.scenario == ScenarioKind::SyntheticEnv {
            self.band.ofdm_bands().map_err(|e| Error::Config(format!("band: {e}")))?;
        }
        if !(self.band.f_ul > 0.0 && self.band.f_dl > 0.0 && self.band.bandwidth > 0.0) {
            return bad("band frequencies and bandwidth must be positive".into());
        }
        self.nn.train.validate().map_err(|e| Error::Config(format!("nn.train: {e}")))?;
        Ok(())
    }

    /// Line-of-sight generator settings for the configured bands.
    pub fn los_config(&self) -> LosScalarConfig {
        LosScalarConfig {
            radius_min: self.los.radius_min,
            radius_max: self.los.radius_max,
            f_ul: self.band.f_ul,
            f_dl: self.band.f_dl,
            beta: self.los.beta,
            bandwidth: self.band.bandwidth,
        }
    }

    /// Environment settings with the configured array size and reference
    /// frequency applied.
    pub fn environment_config(&self) -> EnvironmentConfig {
        EnvironmentConfig {
            antennas: self.antennas,
            reference_freq: self.band.f_ul,
            ..self.environment.clone()
        }
    }
}
