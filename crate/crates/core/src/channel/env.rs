//! Fixed scatterer geometry producing spatially consistent path sets.
//!
//! The environment is a set of point scatterers around a base-station array.
//! A UE position maps to an optional line-of-sight path plus one single-bounce
//! path per scatterer. Path gains follow the power-law free-space model at a
//! reference frequency and stay fixed across bands.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Path, PathSet};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::SPEED_OF_LIGHT;

/// Below this separation (m) two points count as coincident.
const MIN_SEPARATION: f64 = 1e-6;

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point,
    /// Reflection coefficient in (0, 1].
    pub reflection: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub min: Point,
    pub max: Point,
}

impl AreaBounds {
    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] <= self.max[i]) {
                return Err(Error::domain(format!("area bounds invalid on axis {i}")));
            }
        }
        Ok(())
    }
}

fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScattererEnvironment {
    antennas: Vec<Point>,
    scatterers: Vec<Scatterer>,
    area: AreaBounds,
    pathloss_exponent: f64,
    los_blocked: bool,
    reference_freq: f64,
    seed: u64,
}

impl ScattererEnvironment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        antennas: Vec<Point>,
        scatterers: Vec<Scatterer>,
        area: AreaBounds,
        pathloss_exponent: f64,
        los_blocked: bool,
        reference_freq: f64,
        seed: u64,
    ) -> Result<Self> {
        if antennas.is_empty() {
            return Err(Error::domain("environment needs at least one antenna"));
        }
        if !(pathloss_exponent.is_finite() && pathloss_exponent > 2.0) {
            return Err(Error::domain(format!(
                "pathloss exponent must exceed 2, got {pathloss_exponent}"
            )));
        }
        if los_blocked && scatterers.is_empty() {
            return Err(Error::domain("blocked line of sight requires at least one scatterer"));
        }
        if !(reference_freq.is_finite() && reference_freq > 0.0) {
            return Err(Error::domain("reference frequency must be positive"));
        }
        for (i, s) in scatterers.iter().enumerate() {
            if !(s.reflection > 0.0 && s.reflection <= 1.0) {
                return Err(Error::domain(format!(
                    "scatterer {i}: reflection {} outside (0, 1]",
                    s.reflection
                )));
            }
        }
        area.validate()?;
        Ok(ScattererEnvironment {
            antennas,
            scatterers,
            area,
            pathloss_exponent,
            los_blocked,
            reference_freq,
            seed,
        })
    }

    pub fn antennas(&self) -> &[Point] {
        &self.antennas
    }

    pub fn num_antennas(&self) -> usize {
        self.antennas.len()
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn area(&self) -> &AreaBounds {
        &self.area
    }

    pub fn pathloss_exponent(&self) -> f64 {
        self.pathloss_exponent
    }

    pub fn los_blocked(&self) -> bool {
        self.los_blocked
    }

    pub fn reference_freq(&self) -> f64 {
        self.reference_freq
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn gain(&self, length: f64) -> f64 {
        (SPEED_OF_LIGHT / (4.0 * PI * self.reference_freq * length)).powf(self.pathloss_exponent)
    }

    /// Paths from `ue` to antenna `antenna`: line of sight (unless blocked)
    /// plus one single-bounce path per scatterer.
    pub fn env_paths(&self, antenna: usize, ue: Point) -> Result<PathSet> {
        let bs = self.antennas.get(antenna).ok_or_else(|| {
            Error::domain(format!(
                "antenna index {antenna} out of range ({} antennas)",
                self.antennas.len()
            ))
        })?;
        if !self.area.contains(&ue) {
            return Err(Error::domain(format!("UE position {ue:?} outside area bounds")));
        }
        let mut paths = Vec::with_capacity(self.scatterers.len() + 1);
        let direct = distance(&ue, bs);
        if direct < MIN_SEPARATION {
            return Err(Error::domain("UE coincides with an antenna"));
        }
        if !self.los_blocked {
            paths.push(Path {
                gain: self.gain(direct),
                delay: direct / SPEED_OF_LIGHT,
            });
        }
        for s in &self.scatterers {
            let leg_in = distance(&ue, &s.position);
            let leg_out = distance(&s.position, bs);
            if leg_in < MIN_SEPARATION || leg_out < MIN_SEPARATION {
                return Err(Error::domain("UE or antenna coincides with a scatterer"));
            }
            let total = leg_in + leg_out;
            paths.push(Path {
                gain: s.reflection * self.gain(total),
                delay: total / SPEED_OF_LIGHT,
            });
        }
        PathSet::new(paths)
    }
}

/// Recipe for a randomly drawn environment: a uniform linear array along x,
/// scatterers uniform in a box, UE area as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentConfig {
    pub antennas: usize,
    /// Array center.
    pub array_origin: Point,
    /// Element spacing in wavelengths at the reference frequency.
    pub element_spacing_wavelengths: f64,
    pub scatterers: usize,
    pub scatterer_box: AreaBounds,
    /// Reflection coefficients drawn uniformly from this interval.
    pub reflection_range: (f64, f64),
    pub ue_area: AreaBounds,
    pub pathloss_exponent: f64,
    pub los_blocked: bool,
    pub reference_freq: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig {
            antennas: 1,
            array_origin: [0.0, 0.0, 10.0],
            element_spacing_wavelengths: 0.5,
            scatterers: 6,
            scatterer_box: AreaBounds {
                min: [-60.0, -60.0, 0.0],
                max: [60.0, 60.0, 20.0],
            },
            reflection_range: (0.3, 0.9),
            // 20 m x 20 m = 400 m^2 at fixed UE height.
            ue_area: AreaBounds {
                min: [40.0, -10.0, 1.5],
                max: [60.0, 10.0, 1.5],
            },
            pathloss_exponent: 2.5,
            los_blocked: false,
            reference_freq: 1.25e9,
        }
    }
}

impl EnvironmentConfig {
    pub fn build(&self, seed: u64) -> Result<ScattererEnvironment> {
        if self.antennas == 0 {
            return Err(Error::domain("environment needs at least one antenna"));
        }
        let (rmin, rmax) = self.reflection_range;
        if !(rmin > 0.0 && rmin <= rmax && rmax <= 1.0) {
            return Err(Error::domain("reflection range must lie within (0, 1]"));
        }
        self.scatterer_box.validate()?;
        let spacing =
            self.element_spacing_wavelengths * SPEED_OF_LIGHT / self.reference_freq.max(f64::MIN_POSITIVE);
        let half = (self.antennas as f64 - 1.0) / 2.0;
        let antennas = (0..self.antennas)
            .map(|i| {
                let mut p = self.array_origin;
                p[0] += (i as f64 - half) * spacing;
                p
            })
            .collect();
        let mut rng = rng_from_seed(seed);
        let b = &self.scatterer_box;
        let scatterers = (0..self.scatterers)
            .map(|_| {
                let mut position = [0.0; 3];
                for (i, x) in position.iter_mut().enumerate() {
                    *x = if b.max[i] > b.min[i] {
                        rng.random_range(b.min[i]..=b.max[i])
                    } else {
                        b.min[i]
                    };
                }
                let reflection = if rmax > rmin {
                    rng.random_range(rmin..=rmax)
                } else {
                    rmin
                };
                Scatterer {
                    position,
                    reflection,
                }
            })
            .collect();
        ScattererEnvironment::new(
            antennas,
            scatterers,
            self.ue_area,
            self.pathloss_exponent,
            self.los_blocked,
            self.reference_freq,
            seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_area() -> AreaBounds {
        AreaBounds {
            min: [-100.0, -100.0, 0.0],
            max: [100.0, 100.0, 10.0],
        }
    }

    fn los_only(beta: f64) -> ScattererEnvironment {
        ScattererEnvironment::new(
            vec![[0.0, 0.0, 5.0]],
            vec![],
            open_area(),
            beta,
            false,
            1.25e9,
            0,
        )
        .unwrap()
    }

    #[test]
    fn los_only_environment_has_one_path() {
        let env = los_only(2.5);
        let ue = [30.0, 40.0, 5.0];
        let ps = env.env_paths(0, ue).unwrap();
        assert_eq!(ps.len(), 1);
        assert!((ps.paths()[0].delay - 50.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn blocked_los_keeps_only_scatter_paths() {
        let scat = |x: f64| Scatterer {
            position: [x, 20.0, 3.0],
            reflection: 0.5,
        };
        let env = ScattererEnvironment::new(
            vec![[0.0, 0.0, 5.0]],
            vec![scat(-10.0), scat(0.0), scat(10.0)],
            open_area(),
            2.5,
            true,
            1.25e9,
            0,
        )
        .unwrap();
        assert_eq!(env.env_paths(0, [50.0, 0.0, 1.5]).unwrap().len(), 3);
    }

    #[test]
    fn single_bounce_matches_hand_geometry() {
        let beta = 2.4;
        let f_ref = 2.0e9;
        let env = ScattererEnvironment::new(
            vec![[0.0, 0.0, 0.0]],
            vec![Scatterer {
                position: [30.0, 40.0, 0.0],
                reflection: 0.25,
            }],
            open_area(),
            beta,
            true,
            f_ref,
            0,
        )
        .unwrap();
        // UE -> scatterer: (30,40,0)-(60,80,0) = 50 m; scatterer -> BS: 50 m.
        let ps = env.env_paths(0, [60.0, 80.0, 0.0]).unwrap();
        assert_eq!(ps.len(), 1);
        let p = ps.paths()[0];
        let total = 100.0;
        assert!((p.delay - total / SPEED_OF_LIGHT).abs() < 1e-18);
        let gain = 0.25 * (SPEED_OF_LIGHT / (4.0 * PI * f_ref * total)).powf(beta);
        assert!((p.gain - gain).abs() <= 1e-12 * gain);
    }

    #[test]
    fn gain_decreases_with_distance() {
        let env = los_only(2.5);
        let mut last = f64::INFINITY;
        for x in [1.0, 2.0, 5.0, 10.0, 50.0, 99.0] {
            let g = env.env_paths(0, [x, 0.0, 5.0]).unwrap().paths()[0].gain;
            assert!(g < last);
            last = g;
        }
    }

    #[test]
    fn env_paths_is_pure() {
        let env = EnvironmentConfig {
            antennas: 4,
            ..EnvironmentConfig::default()
        }
        .build(7)
        .unwrap();
        let ue = [45.3, 2.2, 1.5];
        for m in 0..4 {
            assert_eq!(env.env_paths(m, ue).unwrap(), env.env_paths(m, ue).unwrap());
        }
        let again = EnvironmentConfig {
            antennas: 4,
            ..EnvironmentConfig::default()
        }
        .build(7)
        .unwrap();
        assert_eq!(env, again);
    }

    #[test]
    fn invalid_inputs() {
        let env = los_only(2.5);
        assert!(env.env_paths(1, [1.0, 1.0, 1.0]).is_err());
        assert!(env.env_paths(0, [500.0, 0.0, 1.0]).is_err());
        assert!(env.env_paths(0, [0.0, 0.0, 5.0]).is_err());
        assert!(ScattererEnvironment::new(vec![[0.0; 3]], vec![], open_area(), 2.5, true, 1e9, 0)
            .is_err());
        assert!(ScattererEnvironment::new(vec![[0.0; 3]], vec![], open_area(), 2.0, false, 1e9, 0)
            .is_err());
    }
}
