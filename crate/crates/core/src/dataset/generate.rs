use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CsiDataset, CsiSample, Scenario};
use crate::channel::{
    freq_response, los_coefficient, AreaBounds, BandConfig, CsiMatrix, ScattererEnvironment,
};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Flat line-of-sight scenario: UE uniformly distributed in distance between
/// `radius_min` and `radius_max` around a single-antenna base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LosScalarConfig {
    pub radius_min: f64,
    pub radius_max: f64,
    pub f_ul: f64,
    pub f_dl: f64,
    pub beta: f64,
    /// Nominal bandwidth recorded in the band metadata.
    pub bandwidth: f64,
}

impl Default for LosScalarConfig {
    fn default() -> Self {
        LosScalarConfig {
            radius_min: 100.0,
            radius_max: 200.0,
            f_ul: 1.25e9,
            f_dl: 1.275e9,
            beta: 2.5,
            bandwidth: 20e6,
        }
    }
}

impl LosScalarConfig {
    pub fn new(f_ul: f64, f_dl: f64) -> Self {
        LosScalarConfig {
            f_ul,
            f_dl,
            ..Self::default()
        }
    }

    pub fn with_separation(delta_f: f64) -> Self {
        let base = Self::default();
        Self::new(base.f_ul, base.f_ul + delta_f)
    }
}

pub fn generate_los_scalar_dataset(
    cfg: &LosScalarConfig,
    n: usize,
    seed: u64,
) -> Result<CsiDataset> {
    if !(cfg.radius_min > 0.0 && cfg.radius_min < cfg.radius_max && cfg.radius_max.is_finite()) {
        return Err(Error::domain(format!(
            "need 0 < radius_min < radius_max, got {} and {}",
            cfg.radius_min, cfg.radius_max
        )));
    }
    let band_ul = BandConfig::scalar(cfg.f_ul, cfg.bandwidth)?;
    let band_dl = BandConfig::scalar(cfg.f_dl, cfg.bandwidth)?;
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let d = rng.random_range(cfg.radius_min..=cfg.radius_max);
        let azimuth = rng.random_range(0.0..2.0 * PI);
        samples.push(CsiSample {
            ue_position: [d * azimuth.cos(), d * azimuth.sin(), 0.0],
            h_ul: CsiMatrix::scalar(los_coefficient(d, cfg.f_ul, cfg.beta)?),
            h_dl: CsiMatrix::scalar(los_coefficient(d, cfg.f_dl, cfg.beta)?),
        });
    }
    CsiDataset::new(band_ul, band_dl, 1, Scenario::LosScalar, samples)
}

fn uniform_positions(area: &AreaBounds, n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let mut p = [0.0; 3];
            for (i, x) in p.iter_mut().enumerate() {
                *x = if area.max[i] > area.min[i] {
                    rng.random_range(area.min[i]..=area.max[i])
                } else {
                    area.min[i]
                };
            }
            p
        })
        .collect()
}

/// Regular grid over the horizontal extent of `area` at its minimum height.
pub fn grid_positions(area: &AreaBounds, spacing: f64) -> Result<Vec<[f64; 3]>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::domain("grid spacing must be positive"));
    }
    let nx = ((area.max[0] - area.min[0]) / spacing).floor() as usize + 1;
    let ny = ((area.max[1] - area.min[1]) / spacing).floor() as usize + 1;
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            out.push([
                area.min[0] + i as f64 * spacing,
                area.min[1] + j as f64 * spacing,
                area.min[2],
            ]);
        }
    }
    Ok(out)
}

/// `n` UEs placed uniformly in the environment's area.
pub fn generate_env_dataset(
    env: &ScattererEnvironment,
    band_ul: &BandConfig,
    band_dl: &BandConfig,
    n: usize,
    seed: u64,
) -> Result<CsiDataset> {
    let positions = uniform_positions(env.area(), n, seed);
    generate_env_dataset_at(env, band_ul, band_dl, &positions)
}

/// One sample per given UE position. Each antenna's path set is evaluated on
/// both bands.
pub fn generate_env_dataset_at(
    env: &ScattererEnvironment,
    band_ul: &BandConfig,
    band_dl: &BandConfig,
    positions: &[[f64; 3]],
) -> Result<CsiDataset> {
    band_ul.validate()?;
    band_dl.validate()?;
    if band_ul.bandwidth != band_dl.bandwidth || band_ul.n_sub != band_dl.n_sub {
        return Err(Error::domain(
            "uplink and downlink bands must share bandwidth and subcarrier grid",
        ));
    }
    let m = env.num_antennas();
    let samples = positions
        .par_iter()
        .map(|&ue| {
            let mut ul = Vec::with_capacity(m);
            let mut dl = Vec::with_capacity(m);
            for a in 0..m {
                let paths = env.env_paths(a, ue)?;
                ul.push(freq_response(&paths, band_ul));
                dl.push(freq_response(&paths, band_dl));
            }
            Ok(CsiSample {
                ue_position: ue,
                h_ul: CsiMatrix::from_rows(ul)?,
                h_dl: CsiMatrix::from_rows(dl)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(
        CsiDataset::new(*band_ul, *band_dl, m, Scenario::SyntheticEnv, samples)?
            .with_env_seed(Some(env.seed())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::EnvironmentConfig;

    #[test]
    fn empty_los_dataset_keeps_metadata() {
        let ds = generate_los_scalar_dataset(&LosScalarConfig::default(), 0, 1).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.band_ul().center_freq, 1.25e9);
        assert_eq!(ds.band_separation(), 25e6);
        assert_eq!(ds.scenario(), Scenario::LosScalar);
    }

    #[test]
    fn los_magnitudes_follow_band_ratio() {
        let cfg = LosScalarConfig::default();
        let ds = generate_los_scalar_dataset(&cfg, 5000, 2).unwrap();
        assert_eq!(ds.len(), 5000);
        let ratio = (cfg.f_ul / cfg.f_dl).powf(cfg.beta);
        for s in ds.samples() {
            let (ul, dl) = (s.h_ul.get(0, 0), s.h_dl.get(0, 0));
            assert!((dl.norm() - ratio * ul.norm()).abs() <= 1e-12 * ul.norm());
            let d = s.ue_position[0].hypot(s.ue_position[1]);
            assert!((100.0..=200.0).contains(&d));
        }
    }

    #[test]
    fn invalid_radii() {
        let cfg = LosScalarConfig {
            radius_min: 200.0,
            radius_max: 100.0,
            ..LosScalarConfig::default()
        };
        assert!(generate_los_scalar_dataset(&cfg, 1, 0).is_err());
    }

    fn small_bands(f_ul: f64, f_dl: f64) -> (BandConfig, BandConfig) {
        (
            BandConfig::new(f_ul, 20e6, 64, 52, 16).unwrap(),
            BandConfig::new(f_dl, 20e6, 64, 52, 16).unwrap(),
        )
    }

    #[test]
    fn env_dataset_is_deterministic() {
        let env = EnvironmentConfig {
            antennas: 2,
            ..EnvironmentConfig::default()
        }
        .build(3)
        .unwrap();
        let (ul, dl) = small_bands(1.25e9, 1.275e9);
        let a = generate_env_dataset(&env, &ul, &dl, 20, 9).unwrap();
        let b = generate_env_dataset(&env, &ul, &dl, 20, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples()[0].h_ul.dims(), (2, 52));
    }

    #[test]
    fn los_only_env_has_flat_magnitude() {
        let env = EnvironmentConfig {
            scatterers: 0,
            ..EnvironmentConfig::default()
        }
        .build(0)
        .unwrap();
        let (ul, dl) = small_bands(1.25e9, 1.275e9);
        let ds = generate_env_dataset(&env, &ul, &dl, 10, 1).unwrap();
        for s in ds.samples() {
            let row = s.h_ul.row(0);
            let m0 = row[0].norm();
            assert!(row.iter().all(|v| (v.norm() - m0).abs() <= 1e-12 * m0));
        }
    }

    #[test]
    fn zero_separation_gives_identical_bands() {
        let env = EnvironmentConfig::default().build(5).unwrap();
        let (ul, dl) = small_bands(1.25e9, 1.25e9);
        let ds = generate_env_dataset(&env, &ul, &dl, 10, 2).unwrap();
        for s in ds.samples() {
            assert_eq!(s.h_ul, s.h_dl);
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let env = EnvironmentConfig::default().build(5).unwrap();
        let ul = BandConfig::new(1.25e9, 20e6, 64, 52, 16).unwrap();
        let dl = BandConfig::new(1.275e9, 10e6, 64, 52, 16).unwrap();
        assert!(generate_env_dataset(&env, &ul, &dl, 1, 0).is_err());
    }

    #[test]
    fn grid_covers_area() {
        let area = AreaBounds {
            min: [0.0, 0.0, 1.5],
            max: [1.0, 2.0, 1.5],
        };
        let g = grid_positions(&area, 0.5).unwrap();
        assert_eq!(g.len(), 3 * 5);
        assert!(g.iter().all(|p| area.contains(p)));
    }
}
