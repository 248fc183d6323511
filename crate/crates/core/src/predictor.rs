//! Common interface over every downlink predictor.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{BandConfig, CsiMatrix};
use crate::error::{Error, Result};
use crate::estimators::{analytical_los_predict_csi, WienerModel};
use crate::nn::{build_conv_net, build_los_net, checkpoint, train, EpochRecord, NetworkModel, TrainConfig, TrainData};
use crate::rng::{derive, mix, rng_from_seed};

/// Maps an uplink observation to a downlink estimate.
pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix>;

    fn predict_batch(&self, h_ul: &[CsiMatrix]) -> Result<Vec<CsiMatrix>> {
        h_ul.par_iter().map(|h| self.predict(h)).collect()
    }
}

/// Closed-form line-of-sight extrapolation, applied entry-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalPredictor {
    pub f_ul: f64,
    pub f_dl: f64,
    pub beta: f64,
}

impl Predictor for AnalyticalPredictor {
    fn name(&self) -> &str {
        "analytical"
    }

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        analytical_los_predict_csi(h_ul, self.f_ul, self.f_dl, self.beta)
    }
}

impl Predictor for WienerModel {
    fn name(&self) -> &str {
        match self.variant() {
            crate::estimators::WienerVariant::Global => "wiener_global",
            crate::estimators::WienerVariant::Matched => "wiener_matched",
        }
    }

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        WienerModel::predict(self, h_ul)
    }

    fn predict_batch(&self, h_ul: &[CsiMatrix]) -> Result<Vec<CsiMatrix>> {
        WienerModel::predict_batch(self, h_ul)
    }
}

/// Returns the uplink unchanged; exact when both bands coincide.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPredictor;

impl Predictor for IdentityPredictor {
    fn name(&self) -> &str {
        "identity"
    }

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        Ok(h_ul.clone())
    }
}

/// Ignores the observation's structure and emits circularly symmetric Gaussian
/// CSI of the same mean power. Deterministic per (seed, input).
#[derive(Debug, Clone, Copy)]
pub struct RandomPredictor {
    pub seed: u64,
}

impl Predictor for RandomPredictor {
    fn name(&self) -> &str {
        "random"
    }

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        let key = h_ul
            .as_slice()
            .iter()
            .fold(self.seed, |acc, z| mix(acc ^ z.re.to_bits()) ^ mix(z.im.to_bits()));
        let mut rng = rng_from_seed(key);
        let amp = (h_ul.mean_power() / 2.0).sqrt();
        let values = (0..h_ul.len())
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * amp
            })
            .collect();
        CsiMatrix::from_vec(h_ul.antennas(), h_ul.subcarriers(), values)
    }
}

/// How CSI is laid out as a network tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NnLayout {
    /// Interleaved (re, im) of every entry, row-major: `[M * n * 2]`.
    Flat,
    /// Used subcarriers placed at their bins of a zero-padded OFDM grid,
    /// channels-last `[grid, 2 * M]` on input and `[M, grid, 2]` on output
    /// (`[grid, 2]` for one antenna).
    Grid { grid: usize, first_bin: usize },
}

impl NnLayout {
    /// Grid layout matching `band`.
    pub fn for_band(band: &BandConfig) -> Self {
        NnLayout::Grid {
            grid: band.n_sub,
            first_bin: band.first_used_bin(),
        }
    }
}

/// Converts between CSI matrices and network tensors, including the global
/// RMS normalization of inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnAdapter {
    pub layout: NnLayout,
    pub antennas: usize,
    pub subcarriers: usize,
    /// Feed each antenna through the network separately.
    pub per_antenna: bool,
    pub input_scale: f64,
    pub output_scale: f64,
}

fn rms(h: &[CsiMatrix]) -> f64 {
    let count: usize = h.iter().map(CsiMatrix::len).sum();
    let energy: f64 = h.iter().map(CsiMatrix::energy).sum();
    if count == 0 || energy == 0.0 {
        1.0
    } else {
        (energy / count as f64).sqrt()
    }
}

impl NnAdapter {
    /// Adapter whose scales are the RMS entry magnitudes of the training
    /// uplink and downlink.
    pub fn fit(ul: &[CsiMatrix], dl: &[CsiMatrix], layout: NnLayout, per_antenna: bool) -> Result<Self> {
        let first = ul.first().ok_or_else(|| Error::domain("training set is empty"))?;
        let (antennas, subcarriers) = first.dims();
        if let NnLayout::Grid { grid, first_bin } = layout {
            if first_bin + subcarriers > grid {
                return Err(Error::domain(format!(
                    "{subcarriers} subcarriers from bin {first_bin} do not fit a grid of {grid}"
                )));
            }
        }
        Ok(NnAdapter {
            layout,
            antennas,
            subcarriers,
            per_antenna,
            input_scale: rms(ul),
            output_scale: rms(dl),
        })
    }

    /// Antennas handled by one network evaluation.
    pub fn net_antennas(&self) -> usize {
        if self.per_antenna {
            1
        } else {
            self.antennas
        }
    }

    /// Tensor length for one network evaluation.
    pub fn tensor_len(&self) -> usize {
        match self.layout {
            NnLayout::Flat => self.net_antennas() * self.subcarriers * 2,
            NnLayout::Grid { grid, .. } => self.net_antennas() * grid * 2,
        }
    }

    /// Network evaluations per CSI matrix.
    pub fn passes(&self) -> usize {
        if self.per_antenna {
            self.antennas
        } else {
            1
        }
    }

    fn rows<'a>(&self, h: &'a CsiMatrix, pass: usize) -> Vec<&'a [Complex64]> {
        if self.per_antenna {
            vec![h.row(pass)]
        } else {
            (0..self.antennas).map(|a| h.row(a)).collect()
        }
    }

    fn write_input(&self, rows: &[&[Complex64]], scale: f64, out: &mut [f64]) {
        let ch = 2 * rows.len();
        for (a, row) in rows.iter().enumerate() {
            for (k, z) in row.iter().enumerate() {
                let base = match self.layout {
                    NnLayout::Flat => (a * self.subcarriers + k) * 2,
                    NnLayout::Grid { first_bin, .. } => (first_bin + k) * ch + 2 * a,
                };
                out[base] = z.re / scale;
                out[base + 1] = z.im / scale;
            }
        }
    }

    fn write_label(&self, rows: &[&[Complex64]], scale: f64, out: &mut [f64]) {
        for (a, row) in rows.iter().enumerate() {
            for (k, z) in row.iter().enumerate() {
                let base = match self.layout {
                    NnLayout::Flat => (a * self.subcarriers + k) * 2,
                    NnLayout::Grid { grid, first_bin } => (a * grid + first_bin + k) * 2,
                };
                out[base] = z.re / scale;
                out[base + 1] = z.im / scale;
            }
        }
    }

    fn read_output(&self, y: &[f64], rows: std::ops::Range<usize>, out: &mut CsiMatrix) {
        for (a_net, a) in rows.enumerate() {
            for (k, o) in out.row_mut(a).iter_mut().enumerate() {
                let base = match self.layout {
                    NnLayout::Flat => (a_net * self.subcarriers + k) * 2,
                    NnLayout::Grid { grid, first_bin } => (a_net * grid + first_bin + k) * 2,
                };
                *o = Complex64::new(y[base], y[base + 1]) * self.output_scale;
            }
        }
    }

    fn check(&self, h: &CsiMatrix) -> Result<()> {
        h.ensure_dims(self.antennas, self.subcarriers)
    }

    /// Network inputs for a batch, `passes()` tensors per matrix.
    pub fn encode_inputs(&self, h_ul: &[CsiMatrix]) -> Result<Vec<f64>> {
        let len = self.tensor_len();
        let mut out = vec![0.0; h_ul.len() * self.passes() * len];
        for (i, h) in h_ul.iter().enumerate() {
            self.check(h)?;
            for p in 0..self.passes() {
                let off = (i * self.passes() + p) * len;
                self.write_input(&self.rows(h, p), self.input_scale, &mut out[off..off + len]);
            }
        }
        Ok(out)
    }

    /// Network labels for a batch, in the output layout.
    pub fn encode_labels(&self, h_dl: &[CsiMatrix]) -> Result<Vec<f64>> {
        let len = self.tensor_len();
        let mut out = vec![0.0; h_dl.len() * self.passes() * len];
        for (i, h) in h_dl.iter().enumerate() {
            self.check(h)?;
            for p in 0..self.passes() {
                let off = (i * self.passes() + p) * len;
                self.write_label(&self.rows(h, p), self.output_scale, &mut out[off..off + len]);
            }
        }
        Ok(out)
    }

    /// Decodes network outputs back to CSI matrices.
    pub fn decode_outputs(&self, y: &[f64], count: usize) -> Result<Vec<CsiMatrix>> {
        let len = self.tensor_len();
        if y.len() != count * self.passes() * len {
            return Err(Error::shape(format!("{}", count * self.passes() * len), format!("{}", y.len())));
        }
        Ok((0..count)
            .map(|i| {
                let mut h = CsiMatrix::zeros(self.antennas, self.subcarriers);
                for p in 0..self.passes() {
                    let off = (i * self.passes() + p) * len;
                    let rows = if self.per_antenna { p..p + 1 } else { 0..self.antennas };
                    self.read_output(&y[off..off + len], rows, &mut h);
                }
                h
            })
            .collect())
    }

    /// Marks input entries that carry signal; zero padding stays noise-free.
    pub fn input_mask(&self) -> Option<Vec<bool>> {
        match self.layout {
            NnLayout::Flat => None,
            NnLayout::Grid { grid, first_bin } => {
                let ch = 2 * self.net_antennas();
                Some(
                    (0..grid * ch)
                        .map(|i| (first_bin..first_bin + self.subcarriers).contains(&(i / ch)))
                        .collect(),
                )
            }
        }
    }

    /// Training tensors for the pairs `(ul, dl)`.
    pub fn training_data(&self, ul: &[CsiMatrix], dl: &[CsiMatrix]) -> Result<TrainData> {
        if ul.len() != dl.len() {
            return Err(Error::shape(format!("{} labels", ul.len()), format!("{}", dl.len())));
        }
        let len = self.tensor_len();
        let data = TrainData::new(self.encode_inputs(ul)?, self.encode_labels(dl)?, len, len)?;
        match self.input_mask() {
            Some(mask) => data.with_mask(mask),
            None => Ok(data),
        }
    }
}

/// A trained network together with its adapter.
#[derive(Debug, Clone)]
pub struct NnPredictor {
    pub model: NetworkModel,
    pub adapter: NnAdapter,
}

impl NnPredictor {
    pub fn new(model: NetworkModel, adapter: NnAdapter) -> Result<Self> {
        let len = adapter.tensor_len();
        if model.input_len() != len || model.output_len() != len {
            return Err(Error::shape(
                format!("{len} -> {len}"),
                format!("{} -> {}", model.input_len(), model.output_len()),
            ));
        }
        Ok(NnPredictor { model, adapter })
    }

    /// Path of the adapter sidecar next to a checkpoint.
    pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
        let mut name = checkpoint.as_os_str().to_owned();
        name.push(".json");
        PathBuf::from(name)
    }

    /// Writes the checkpoint and its JSON sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        checkpoint::save(&self.model, path)?;
        let sidecar = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.adapter).expect("adapter serializes");
        fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let model = checkpoint::load(path)?;
        let sidecar = Self::sidecar_path(path);
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let adapter: NnAdapter =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", sidecar.display())))?;
        NnPredictor::new(model, adapter)
    }
}

/// Network family used for a prediction task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnArchitecture {
    /// Dense network for scalar CSI, the SISO convolutional network otherwise
    /// (applied per antenna when `per_antenna` is set), the MIMO network for
    /// joint multi-antenna prediction.
    #[default]
    Auto,
    Los,
    Siso,
    Mimo,
}

/// Architecture and training settings for [`NnPredictor::train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnSettings {
    pub architecture: NnArchitecture,
    /// Predict every antenna independently with one shared SISO network.
    pub per_antenna: bool,
    pub train: TrainConfig,
}

impl Default for NnSettings {
    fn default() -> Self {
        NnSettings {
            architecture: NnArchitecture::Auto,
            per_antenna: false,
            train: TrainConfig::default(),
        }
    }
}

impl NnSettings {
    /// Resolves `Auto` for CSI of the given shape.
    pub fn resolve(&self, antennas: usize, subcarriers: usize) -> NnArchitecture {
        match self.architecture {
            NnArchitecture::Auto if antennas * subcarriers == 1 => NnArchitecture::Los,
            NnArchitecture::Auto if antennas == 1 || self.per_antenna => NnArchitecture::Siso,
            NnArchitecture::Auto => NnArchitecture::Mimo,
            other => other,
        }
    }
}

impl NnPredictor {
    /// Builds the network for `settings`, fits the adapter on the training
    /// pairs and trains. `band` locates the used subcarriers on the OFDM grid.
    pub fn train(
        ul: &[CsiMatrix],
        dl: &[CsiMatrix],
        band: &BandConfig,
        settings: &NnSettings,
    ) -> Result<(NnPredictor, Vec<EpochRecord>)> {
        let first = ul.first().ok_or_else(|| Error::domain("training set is empty"))?;
        let (m, n) = first.dims();
        let arch = settings.resolve(m, n);
        let (layout, per_antenna, model) = match arch {
            NnArchitecture::Los => {
                if m * n != 1 {
                    return Err(Error::Config(format!("the LoS network takes scalar CSI, got {m}x{n}")));
                }
                (NnLayout::Flat, false, build_los_net())
            }
            NnArchitecture::Siso => {
                (NnLayout::for_band(band), m > 1, build_conv_net(band.n_sub, 1, &[128, 128, 128])?)
            }
            NnArchitecture::Mimo => (NnLayout::for_band(band), false, build_conv_net(band.n_sub, m, &[16, 32, 64])?),
            NnArchitecture::Auto => unreachable!("resolved above"),
        };
        let adapter = NnAdapter::fit(ul, dl, layout, per_antenna)?;
        let data = adapter.training_data(ul, dl)?;
        let model = model.with_init(derive(settings.train.seed, 0x1417));
        let outcome = train(model, &data, &settings.train)?;
        Ok((NnPredictor::new(outcome.model, adapter)?, outcome.history))
    }
}

impl Predictor for NnPredictor {
    fn name(&self) -> &str {
        "nn"
    }

    fn predict(&self, h_ul: &CsiMatrix) -> Result<CsiMatrix> {
        Ok(self.predict_batch(std::slice::from_ref(h_ul))?.remove(0))
    }

    fn predict_batch(&self, h_ul: &[CsiMatrix]) -> Result<Vec<CsiMatrix>> {
        let x = self.adapter.encode_inputs(h_ul)?;
        let y = self.model.forward(&x, h_ul.len() * self.adapter.passes())?;
        self.adapter.decode_outputs(&y, h_ul.len())
    }
}
