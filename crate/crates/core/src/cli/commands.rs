use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{ExperimentConfig, PredictorKind, ScenarioKind};
use crate::channel::{add_awgn, CsiMatrix};
use crate::dataset::{generate_env_dataset, generate_los_scalar_dataset, split, CsiDataset};
use crate::error::{Error, Result};
use crate::estimators::{wiener_fit, WienerVariant};
use crate::metrics::{ber_qpsk, corr_coeff_batch, nmse_batch, BerCurve};
use crate::nn::EpochRecord;
use crate::precoding::{evaluate_predictions, sigma2_for_snr};
use crate::predictor::{AnalyticalPredictor, IdentityPredictor, NnPredictor, Predictor, RandomPredictor};
use crate::rng::derive;

pub const HISTORY_HEADER: &str = "epoch,batch_size,learning_rate,loss";
pub const EVALUATE_HEADER: &str = "predictor,metric,snr_db,value";

// Seed tags; every random stream is derived from the configured seed.
pub(super) const TAG_DATA: u64 = 1;
pub(super) const TAG_SPLIT: u64 = 2;
pub(super) const TAG_ENV: u64 = 3;
pub(super) const TAG_TEST_NOISE: u64 = 4;
pub(super) const TAG_BER: u64 = 5;
pub(super) const TAG_SUM_RATE: u64 = 6;
pub(super) const TAG_NN: u64 = 7;
pub(super) const TAG_RANDOM: u64 = 8;

pub(super) fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates `n` samples of the configured scenario.
pub(super) fn generate(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<CsiDataset> {
    match cfg.scenario {
        ScenarioKind::LosScalar => generate_los_scalar_dataset(&cfg.los_config(), n, seed),
        ScenarioKind::SyntheticEnv => {
            let env = cfg.environment_config().build(derive(cfg.seed, TAG_ENV))?;
            let (ul, dl) = cfg.band.ofdm_bands()?;
            generate_env_dataset(&env, &ul, &dl, n, seed)
        }
    }
}

fn load_or_generate(cfg: &ExperimentConfig, dataset: Option<&Path>) -> Result<CsiDataset> {
    match dataset {
        Some(path) => CsiDataset::load(path),
        None => generate(cfg, cfg.n_samples, derive(cfg.seed, TAG_DATA)),
    }
}

pub(super) fn split_config(cfg: &ExperimentConfig, ds: &CsiDataset) -> Result<(CsiDataset, CsiDataset)> {
    split(ds, cfg.train_fraction, derive(cfg.seed, TAG_SPLIT))
}

/// Test-time uplink, with AWGN when `metrics.test_snr_db` is set.
pub(super) fn test_uplink(cfg: &ExperimentConfig, test: &CsiDataset) -> Vec<CsiMatrix> {
    let noise_seed = derive(cfg.seed, TAG_TEST_NOISE);
    match cfg.metrics.test_snr_db {
        Some(snr) => test
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| add_awgn(&s.h_ul, snr, derive(noise_seed, i as u64)))
            .collect(),
        None => test.uplink(),
    }
}

fn wiener_sigma2(cfg: &ExperimentConfig, train: &CsiDataset) -> Result<f64> {
    match cfg.wiener.fit_snr_db.or(cfg.metrics.test_snr_db) {
        Some(snr) => sigma2_for_snr(&train.uplink(), snr),
        None => Ok(0.0),
    }
}

pub(super) fn nn_settings(cfg: &ExperimentConfig) -> crate::predictor::NnSettings {
    let mut settings = cfg.nn.clone();
    settings.train.seed = derive(derive(cfg.seed, TAG_NN), cfg.nn.train.seed);
    settings
}

pub(super) fn train_nn(cfg: &ExperimentConfig, train: &CsiDataset) -> Result<(NnPredictor, Vec<EpochRecord>)> {
    NnPredictor::train(&train.uplink(), &train.downlink(), train.band_ul(), &nn_settings(cfg))
}

/// Builds a ready-to-use predictor from the training split.
pub(super) fn build_predictor(
    cfg: &ExperimentConfig,
    kind: PredictorKind,
    train: &CsiDataset,
    model: Option<&Path>,
) -> Result<Box<dyn Predictor>> {
    Ok(match kind {
        PredictorKind::Analytical => Box::new(AnalyticalPredictor {
            f_ul: train.band_ul().center_freq,
            f_dl: train.band_dl().center_freq,
            beta: cfg.los.beta,
        }),
        PredictorKind::WienerGlobal | PredictorKind::WienerMatched => {
            let variant = if kind == PredictorKind::WienerGlobal {
                WienerVariant::Global
            } else {
                WienerVariant::Matched
            };
            Box::new(wiener_fit(train, wiener_sigma2(cfg, train)?, variant)?)
        }
        PredictorKind::Nn => match model {
            Some(path) => Box::new(NnPredictor::load(path)?),
            None => Box::new(train_nn(cfg, train)?.0),
        },
        PredictorKind::Identity => Box::new(IdentityPredictor),
        PredictorKind::Random => Box::new(RandomPredictor {
            seed: derive(cfg.seed, TAG_RANDOM),
        }),
    })
}

/// `generate`: writes `<out>/dataset.fddcsi`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let ds = generate(cfg, cfg.n_samples, derive(cfg.seed, TAG_DATA))?;
    let path = cfg.out_dir.join("dataset.fddcsi");
    ds.save(&path)?;
    Ok(json!({
        "command": "generate",
        "path": path,
        "samples": ds.len(),
        "scenario": ds.scenario().name(),
        "antennas": ds.antennas(),
        "subcarriers": ds.subcarriers(),
        "band_ul": ds.band_ul(),
        "band_dl": ds.band_dl(),
    }))
}

/// `train`: fits the network on the training split.
pub fn cmd_train(cfg: &ExperimentConfig, dataset: Option<&Path>) -> Result<serde_json::Value> {
    if cfg.predictor != PredictorKind::Nn {
        return Err(Error::Config(format!(
            "train applies to predictor \"nn\", configured predictor is \"{}\"",
            cfg.predictor.name()
        )));
    }
    let ds = load_or_generate(cfg, dataset)?;
    let (train, _) = split_config(cfg, &ds)?;
    let (nn, history) = train_nn(cfg, &train)?;
    let model_path = cfg.out_dir.join("model.fddnn");
    nn.save(&model_path)?;
    let history_path = cfg.out_dir.join("history.csv");
    let rows: Vec<String> = history
        .iter()
        .map(|r| format!("{},{},{},{}", r.epoch, r.batch_size, r.learning_rate, r.loss))
        .collect();
    write_csv(&history_path, HISTORY_HEADER, &rows)?;
    Ok(json!({
        "command": "train",
        "model": model_path,
        "sidecar": NnPredictor::sidecar_path(&model_path),
        "history": history_path,
        "train_samples": train.len(),
        "epochs": history.len(),
        "final_loss": history.last().map(|r| r.loss),
    }))
}

fn ber_rows(rows: &mut Vec<String>, predictor: &str, curve: &BerCurve) {
    for (snr, ber) in curve.snr_points_db.iter().zip(&curve.ber) {
        rows.push(format!("{predictor},ber,{snr},{ber}"));
    }
}

/// `evaluate`: scores the configured predictor on the test split and writes
/// `<out>/metrics.csv` in long format (`predictor,metric,snr_db,value`).
pub fn cmd_evaluate(cfg: &ExperimentConfig, dataset: Option<&Path>, model: Option<&Path>) -> Result<serde_json::Value> {
    let ds = load_or_generate(cfg, dataset)?;
    let (train, test) = split_config(cfg, &ds)?;
    if test.is_empty() {
        return Err(Error::Config("the test split is empty; lower train_fraction".into()));
    }
    let default_model: PathBuf = cfg.out_dir.join("model.fddnn");
    let model = match (cfg.predictor, model) {
        (PredictorKind::Nn, None) => Some(default_model.as_path()),
        (_, m) => m,
    };
    let predictor = build_predictor(cfg, cfg.predictor, &train, model)?;
    let name = cfg.predictor.name();
    let truth = test.downlink();
    let predicted = predictor.predict_batch(&test_uplink(cfg, &test))?;

    let nmse = nmse_batch(&predicted, &truth)?;
    let corr = corr_coeff_batch(&predicted, &truth)?;
    let mut rows = vec![format!("{name},nmse,,{nmse}"), format!("{name},corr_coeff,,{corr}")];
    let mut summary = json!({
        "command": "evaluate",
        "predictor": name,
        "test_samples": test.len(),
        "nmse": nmse,
        "corr_coeff": corr,
    });
    if let Some(ber) = &cfg.metrics.ber {
        let curve = ber_qpsk(&truth, &predicted, &ber.snr_grid_db, ber.n_bits, ber.mode, derive(cfg.seed, TAG_BER))?;
        ber_rows(&mut rows, name, &curve);
        summary["ber_snr_at_1e-2"] = json!(curve.snr_at_ber(1e-2));
    }
    if let Some(sr) = &cfg.metrics.sum_rate {
        let sigma2 = sigma2_for_snr(&truth, sr.snr_db)?;
        let (pred, bound) = evaluate_predictions(
            &truth,
            &predicted,
            sr.precoder,
            sr.users,
            sigma2,
            sr.draws,
            derive(cfg.seed, TAG_SUM_RATE),
        )?;
        let tag = sr.precoder.name();
        rows.push(format!("{name},sum_rate_{tag},{},{}", sr.snr_db, pred.sum_rate));
        rows.push(format!("{name},sum_rate_{tag}_bound,{},{}", sr.snr_db, bound.sum_rate));
        summary["sum_rate"] = json!(pred.sum_rate);
        summary["sum_rate_bound"] = json!(bound.sum_rate);
    }
    let path = cfg.out_dir.join("metrics.csv");
    write_csv(&path, EVALUATE_HEADER, &rows)?;
    summary["metrics"] = json!(path);
    Ok(summary)
}
