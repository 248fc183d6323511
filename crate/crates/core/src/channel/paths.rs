use std::f64::consts::PI;

use num_complex::Complex64;

use super::BandConfig;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// One propagation path: real attenuation and delay in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: f64,
    pub delay: f64,
}

/// Multipath impulse response `h(t) = sum_p a_p delta(t - tau_p)`, with
/// delays sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(mut paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::domain("path set needs at least one path"));
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.gain.is_finite() && p.gain >= 0.0) {
                return Err(Error::domain(format!("path {i}: gain {} invalid", p.gain)));
            }
            if !(p.delay.is_finite() && p.delay >= 0.0) {
                return Err(Error::domain(format!("path {i}: delay {} invalid", p.delay)));
            }
        }
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(PathSet { paths })
    }

    pub fn single(gain: f64, delay: f64) -> Result<Self> {
        Self::new(vec![Path { gain, delay }])
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.last().map_or(0.0, |p| p.delay)
    }
}

/// Free-space line-of-sight coefficient
/// `(c / (4 pi f d))^beta * exp(-j 2 pi f d / c)`.
pub fn los_coefficient(distance: f64, f_c: f64, beta: f64) -> Result<Complex64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::domain(format!("distance must be positive, got {distance}")));
    }
    if !(f_c.is_finite() && f_c > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {f_c}")));
    }
    if !beta.is_finite() {
        return Err(Error::domain("pathloss exponent must be finite"));
    }
    let magnitude = (SPEED_OF_LIGHT / (4.0 * PI * f_c * distance)).powf(beta);
    let phase = -2.0 * PI * f_c * distance / SPEED_OF_LIGHT;
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapOptions {
    /// Truncation threshold relative to the largest tap magnitude.
    pub relative_eps: f64,
    /// Hard cap on the number of taps.
    pub max_taps: usize,
}

impl TapOptions {
    pub fn for_band(band: &BandConfig) -> Self {
        TapOptions {
            relative_eps: 1e-4,
            max_taps: (4 * band.cp_len).max(1),
        }
    }
}

impl Default for TapOptions {
    fn default() -> Self {
        TapOptions {
            relative_eps: 1e-4,
            max_taps: 4 * BandConfig::DEFAULT_CP_LEN,
        }
    }
}

/// Discrete-time baseband channel `h_0 .. h_{L-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandTaps {
    pub taps: Vec<Complex64>,
    /// Absolute truncation threshold that was applied.
    pub threshold: f64,
    /// True when `max_taps` cut the response before it fell below threshold.
    pub capped: bool,
}

impl BasebandTaps {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `n_sub`-point DFT of the zero-padded taps, evaluated on the used bins
    /// of `band`. Taps beyond `n_sub` wrap around, as they would inside a
    /// cyclic-prefixed OFDM symbol.
    pub fn spectrum(&self, band: &BandConfig) -> Vec<Complex64> {
        let n = band.n_sub as f64;
        band.used_bins()
            .map(|bin| {
                let m = band.bin_index(bin) as f64;
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(l, h)| h * Complex64::from_polar(1.0, -2.0 * PI * l as f64 * m / n))
                    .sum()
            })
            .collect()
    }
}

fn tap_value(paths: &PathSet, f_c: f64, bandwidth: f64, l: f64) -> Complex64 {
    paths
        .paths()
        .iter()
        .map(|p| {
            let rot = Complex64::from_polar(1.0, -2.0 * PI * f_c * p.delay);
            rot * (p.gain * sinc(l - p.delay * bandwidth))
        })
        .sum()
}

/// Equivalent discrete-time baseband model of `paths` on a band with carrier
/// `f_c` and bandwidth `bandwidth`:
/// `h_l = sum_p a_p exp(-j 2 pi f_c tau_p) sinc(l - tau_p W)`.
///
/// `L` is one past the last tap whose magnitude reaches
/// `relative_eps * max|h_l|`, limited to `max_taps`.
pub fn to_baseband(
    paths: &PathSet,
    f_c: f64,
    bandwidth: f64,
    options: TapOptions,
) -> Result<BasebandTaps> {
    if paths.is_empty() {
        return Err(Error::domain("empty path set"));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if !(options.relative_eps.is_finite() && options.relative_eps > 0.0) {
        return Err(Error::domain("truncation threshold must be positive"));
    }
    if options.max_taps == 0 {
        return Err(Error::domain("max_taps must be at least 1"));
    }
    // One extra tap so the first excluded coefficient can be inspected.
    let full: Vec<Complex64> = (0..=options.max_taps)
        .map(|l| tap_value(paths, f_c, bandwidth, l as f64))
        .collect();
    let peak = full.iter().map(|h| h.norm()).fold(0.0, f64::max);
    let threshold = options.relative_eps * peak;
    let last_significant = full.iter().rposition(|h| h.norm() >= threshold && peak > 0.0);
    let (len, capped) = match last_significant {
        Some(i) if i >= options.max_taps => (options.max_taps, true),
        Some(i) => (i + 1, false),
        None => (1, false),
    };
    let mut taps = full;
    taps.truncate(len);
    Ok(BasebandTaps {
        taps,
        threshold,
        capped,
    })
}

/// Exact frequency response on the used subcarriers:
/// `H[k] = sum_p a_p exp(-j 2 pi (f_c + f_k) tau_p)`.
pub fn freq_response(paths: &PathSet, band: &BandConfig) -> Vec<Complex64> {
    band.used_frequencies()
        .into_iter()
        .map(|f| {
            paths
                .paths()
                .iter()
                .map(|p| Complex64::from_polar(p.gain, -2.0 * PI * f * p.delay))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = SPEED_OF_LIGHT;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn los_unit_magnitude_distance() {
        let f = 2.4e9;
        let d = C / (4.0 * PI * f);
        for beta in [2.0, 2.5, 3.7] {
            let h = los_coefficient(d, f, beta).unwrap();
            assert!((h.norm() - 1.0).abs() < 1e-12);
            let expected = Complex64::from_polar(1.0, -2.0 * PI * f * d / C);
            assert!(close(h, expected, 1e-12));
        }
    }

    #[test]
    fn los_inverse_square_and_band_ratio() {
        let a = los_coefficient(100.0, 1.25e9, 2.0).unwrap();
        let b = los_coefficient(200.0, 1.25e9, 2.0).unwrap();
        assert!((b.norm() / a.norm() - 0.25).abs() < 1e-12);

        let beta = 2.5;
        let ul = los_coefficient(150.0, 1.25e9, beta).unwrap();
        let dl = los_coefficient(150.0, 1.275e9, beta).unwrap();
        let ratio = dl.norm() / ul.norm();
        assert!((ratio - (1.25e9f64 / 1.275e9).powf(beta)).abs() < 1e-12);
    }

    #[test]
    fn los_phase_is_periodic_in_wavelength() {
        let f = 1.25e9;
        let d = 123.4;
        let a = los_coefficient(d, f, 2.5).unwrap();
        let b = los_coefficient(d + C / f, f, 2.5).unwrap();
        let phase_gap = (a / a.norm() * (b / b.norm()).conj()).arg();
        assert!(phase_gap.abs() < 1e-6, "gap {phase_gap}");
        assert!(b.norm() < a.norm());
    }

    #[test]
    fn los_domain_errors() {
        assert!(los_coefficient(0.0, 1e9, 2.0).is_err());
        assert!(los_coefficient(-1.0, 1e9, 2.0).is_err());
        assert!(los_coefficient(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn pathset_validation_and_sorting() {
        assert!(PathSet::new(vec![]).is_err());
        assert!(PathSet::single(-1.0, 0.0).is_err());
        assert!(PathSet::single(1.0, f64::NAN).is_err());
        let ps = PathSet::new(vec![
            Path { gain: 1.0, delay: 3e-7 },
            Path { gain: 0.5, delay: 1e-7 },
        ])
        .unwrap();
        assert_eq!(ps.paths()[0].delay, 1e-7);
        assert_eq!(ps.max_delay(), 3e-7);
    }

    #[test]
    fn zero_delay_gives_single_tap() {
        let w = 20e6;
        let taps = to_baseband(&PathSet::single(1.0, 0.0).unwrap(), 1.25e9, w, TapOptions::default())
            .unwrap();
        assert_eq!(taps.len(), 1);
        assert!(close(taps.taps[0], Complex64::new(1.0, 0.0), 1e-15));
        assert!(!taps.capped);
    }

    #[test]
    fn one_sample_delay_shifts_the_tap() {
        let w = 20e6;
        let f_c = 1.25e9;
        let ps = PathSet::single(1.0, 1.0 / w).unwrap();
        let taps = to_baseband(&ps, f_c, w, TapOptions::default()).unwrap();
        assert_eq!(taps.len(), 2);
        assert!(taps.taps[0].norm() < 1e-12);
        let expected = Complex64::from_polar(1.0, -2.0 * PI * f_c / w);
        assert!(close(taps.taps[1], expected, 1e-9));
    }

    #[test]
    fn half_sample_delay_matches_direct_evaluation() {
        let w = 20e6;
        let f_c = 1.25e9;
        let tau = 0.5 / w;
        let ps = PathSet::single(1.0, tau).unwrap();
        let opts = TapOptions {
            relative_eps: 1e-4,
            max_taps: 64,
        };
        let taps = to_baseband(&ps, f_c, w, opts).unwrap();
        assert_eq!(taps.len(), 64);
        assert!(taps.capped);
        // Oracle: evaluate the sinc directly from its definition.
        let rot = Complex64::from_polar(1.0, -2.0 * PI * f_c * tau);
        for (l, h) in taps.taps.iter().enumerate() {
            let x = l as f64 - 0.5;
            let s = (PI * x).sin() / (PI * x);
            assert!(close(*h, rot * s, 1e-12), "tap {l}");
        }
    }

    #[test]
    fn truncation_respects_threshold() {
        let ps = PathSet::new(vec![
            Path { gain: 1.0, delay: 0.0 },
            Path { gain: 0.3, delay: 5.0 / 20e6 },
        ])
        .unwrap();
        let opts = TapOptions {
            relative_eps: 1e-3,
            max_taps: 1000,
        };
        let taps = to_baseband(&ps, 1e9, 20e6, opts).unwrap();
        assert_eq!(taps.len(), 6);
        let next = tap_value(&ps, 1e9, 20e6, taps.len() as f64);
        assert!(next.norm() < taps.threshold);
    }

    #[test]
    fn empty_paths_rejected() {
        let empty = PathSet { paths: vec![] };
        assert!(to_baseband(&empty, 1e9, 1e6, TapOptions::default()).is_err());
    }

    #[test]
    fn flat_response_for_zero_delay() {
        let band = BandConfig::ofdm(1.25e9, 20e6).unwrap();
        let h = freq_response(&PathSet::single(1.0, 0.0).unwrap(), &band);
        assert_eq!(h.len(), 922);
        assert!(h.iter().all(|v| close(*v, Complex64::new(1.0, 0.0), 1e-15)));
        let h = freq_response(&PathSet::single(0.5, 0.0).unwrap(), &band);
        assert!(h.iter().all(|v| (v.norm() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn two_path_nulls_sit_where_phases_oppose() {
        let band = BandConfig::ofdm(1.25e9, 20e6).unwrap();
        let dtau = 1.3e-6;
        let ps = PathSet::new(vec![
            Path { gain: 1.0, delay: 0.0 },
            Path { gain: 1.0, delay: dtau },
        ])
        .unwrap();
        let h = freq_response(&ps, &band);
        let freqs = band.used_frequencies();
        // Brute force: |1 + exp(-j 2 pi f dtau)| = 2 |cos(pi f dtau)|.
        for (k, f) in freqs.iter().enumerate() {
            let expected = 2.0 * (PI * f * dtau).cos().abs();
            assert!((h[k].norm() - expected).abs() < 1e-9);
        }
        // Local minima of |H| fall on bins nearest to the odd half-cycles.
        let mags: Vec<f64> = h.iter().map(|v| v.norm()).collect();
        let minima: Vec<usize> = (1..mags.len() - 1)
            .filter(|&k| mags[k] < mags[k - 1] && mags[k] < mags[k + 1])
            .collect();
        assert!(!minima.is_empty());
        let df = band.subcarrier_spacing();
        for k in minima {
            let cycles = freqs[k] * dtau;
            let to_null = (cycles - 0.5 - (cycles - 0.5).round()).abs();
            assert!(to_null <= df * dtau, "minimum at {k} not near a null");
        }
    }
}
