use std::path::Path;

use serde_json::json;

use super::commands::{
    build_predictor, generate, split_config, test_uplink, write_csv, TAG_BER, TAG_DATA, TAG_SUM_RATE,
};
use super::config::{ExperimentConfig, PredictorKind, ScenarioKind};
use crate::dataset::CsiDataset;
use crate::error::{Error, Result};
use crate::metrics::{ber_qpsk, corr_coeff_batch, nmse_batch, qpsk_ber_theory, BerMode};
use crate::precoding::{evaluate_predictions, sigma2_for_snr};
use crate::rng::derive;

/// Sweep families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// BER of each predictor per band separation on the LoS task.
    Fig3,
    /// Test NMSE of the network against training-set size per separation on
    /// the LoS task.
    Fig4,
    /// Perfect-CSI MRT BER per array size.
    Fig9,
    /// Test NMSE and correlation of the configured predictor against
    /// training-set size on the configured scenario.
    NmseVsSamples,
    /// Sum-rate with predicted and true CSI per array size.
    SumrateVsAntennas,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] = [
        SweepKind::Fig3,
        SweepKind::Fig4,
        SweepKind::Fig9,
        SweepKind::NmseVsSamples,
        SweepKind::SumrateVsAntennas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Fig3 => "fig3",
            SweepKind::Fig4 => "fig4",
            SweepKind::Fig9 => "fig9",
            SweepKind::NmseVsSamples => "nmse_vs_samples",
            SweepKind::SumrateVsAntennas => "sumrate_vs_antennas",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            SweepKind::Fig3 => "delta_f_hz,predictor,snr_db,ber",
            SweepKind::Fig4 => "delta_f_hz,n_train,test_nmse",
            SweepKind::Fig9 => "antennas,snr_db,ber",
            SweepKind::NmseVsSamples => "n_train,predictor,test_nmse,test_corr",
            SweepKind::SumrateVsAntennas => "antennas,precoder,predictor,users,sum_rate_predicted,sum_rate_bound",
        }
    }
}

fn with_separation(cfg: &ExperimentConfig, delta_f: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.scenario = ScenarioKind::LosScalar;
    c.antennas = 1;
    c.band.f_dl = c.band.f_ul + delta_f;
    c
}

fn with_antennas(cfg: &ExperimentConfig, antennas: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.scenario = ScenarioKind::SyntheticEnv;
    c.antennas = antennas;
    c
}

/// Training pool of the largest requested size plus a fixed test set.
fn size_sweep_data(cfg: &ExperimentConfig, sizes: &[usize]) -> Result<(CsiDataset, CsiDataset)> {
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let pool = generate(cfg, largest, derive(cfg.seed, TAG_DATA))?;
    let test = generate(cfg, cfg.sweep.test_samples, derive(cfg.seed, TAG_DATA + 100))?;
    Ok((pool, test))
}

fn fig3(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    let s = &cfg.sweep;
    if s.separations_hz.is_empty() || s.snr_grid_db.is_empty() {
        return Ok(rows);
    }
    for &df in &s.separations_hz {
        let c = with_separation(cfg, df);
        let ds = generate(&c, c.n_samples, derive(c.seed, TAG_DATA))?;
        let (train, test) = split_config(&c, &ds)?;
        let truth = test.downlink();
        let ul = test_uplink(&c, &test);
        for snr in &s.snr_grid_db {
            rows.push(format!("{df},qpsk_theory,{snr},{}", qpsk_ber_theory(*snr)));
        }
        for &kind in &s.predictors {
            let predicted = build_predictor(&c, kind, &train, None)?.predict_batch(&ul)?;
            let curve = ber_qpsk(&truth, &predicted, &s.snr_grid_db, s.n_bits, BerMode::Equalize, derive(c.seed, TAG_BER))?;
            for (snr, ber) in curve.snr_points_db.iter().zip(&curve.ber) {
                rows.push(format!("{df},{},{snr},{ber}", kind.name()));
            }
        }
    }
    Ok(rows)
}

fn fig4(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    for &df in &cfg.sweep.separations_hz {
        let c = with_separation(cfg, df);
        rows.extend(
            size_rows(&c, PredictorKind::Nn)?
                .into_iter()
                .map(|(n, nmse, _)| format!("{df},{n},{nmse}")),
        );
    }
    Ok(rows)
}

fn size_rows(cfg: &ExperimentConfig, kind: PredictorKind) -> Result<Vec<(usize, f64, f64)>> {
    let sizes = &cfg.sweep.training_sizes;
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    let (pool, test) = size_sweep_data(cfg, sizes)?;
    if test.is_empty() {
        return Err(Error::Config("sweep.test_samples must be positive".into()));
    }
    let truth = test.downlink();
    let ul = test_uplink(cfg, &test);
    sizes
        .iter()
        .map(|&n| {
            let predicted = build_predictor(cfg, kind, &pool.take(n), None)?.predict_batch(&ul)?;
            Ok((n, nmse_batch(&predicted, &truth)?, corr_coeff_batch(&predicted, &truth)?))
        })
        .collect()
}

fn nmse_vs_samples(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    Ok(size_rows(cfg, cfg.predictor)?
        .into_iter()
        .map(|(n, nmse, corr)| format!("{n},{},{nmse},{corr}", cfg.predictor.name()))
        .collect())
}

fn fig9(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    let s = &cfg.sweep;
    if s.snr_grid_db.is_empty() {
        return Ok(rows);
    }
    for &m in &s.antennas {
        let c = with_antennas(cfg, m);
        let ds = generate(&c, s.samples_per_point, derive(c.seed, TAG_DATA))?;
        let truth = ds.downlink();
        let curve = ber_qpsk(&truth, &truth, &s.snr_grid_db, s.n_bits, BerMode::MrtPrecode, derive(c.seed, TAG_BER))?;
        for (snr, ber) in curve.snr_points_db.iter().zip(&curve.ber) {
            rows.push(format!("{m},{snr},{ber}"));
        }
    }
    Ok(rows)
}

fn sumrate_vs_antennas(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    let sr = cfg.metrics.sum_rate.unwrap_or_default();
    for &m in &cfg.sweep.antennas {
        let c = with_antennas(cfg, m);
        let ds = generate(&c, c.n_samples, derive(c.seed, TAG_DATA))?;
        let (train, test) = split_config(&c, &ds)?;
        let truth = test.downlink();
        let predicted = build_predictor(&c, c.predictor, &train, None)?.predict_batch(&test_uplink(&c, &test))?;
        let sigma2 = sigma2_for_snr(&truth, sr.snr_db)?;
        let (pred, bound) = match evaluate_predictions(
            &truth,
            &predicted,
            sr.precoder,
            sr.users,
            sigma2,
            sr.draws,
            derive(c.seed, TAG_SUM_RATE),
        ) {
            Err(Error::Domain(msg)) => return Err(Error::Config(format!("antennas = {m}: {msg}"))),
            other => other?,
        };
        rows.push(format!(
            "{m},{},{},{},{},{}",
            sr.precoder.name(),
            c.predictor.name(),
            sr.users,
            pred.sum_rate,
            bound.sum_rate
        ));
    }
    Ok(rows)
}

/// Runs a sweep and writes `<out>/sweep_<kind>.csv`. An empty grid yields a
/// header-only file.
pub fn cmd_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<serde_json::Value> {
    let rows = match kind {
        SweepKind::Fig3 => fig3(cfg)?,
        SweepKind::Fig4 => fig4(cfg)?,
        SweepKind::Fig9 => fig9(cfg)?,
        SweepKind::NmseVsSamples => nmse_vs_samples(cfg)?,
        SweepKind::SumrateVsAntennas => sumrate_vs_antennas(cfg)?,
    };
    let path = cfg.out_dir.join(format!("sweep_{}.csv", kind.name()));
    write_csv(Path::new(&path), kind.header(), &rows)?;
    Ok(json!({
        "command": "sweep",
        "kind": kind.name(),
        "rows": rows.len(),
        "path": path,
    }))
}
