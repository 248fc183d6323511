use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CsiMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive, substream};

/// How the used CSI enters the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerMode {
    /// Every (antenna, subcarrier) entry is a SISO link; the receiver
    /// equalizes with the used CSI.
    Equalize,
    /// Per subcarrier the transmitter beamforms with `ĥ^H / ‖ĥ‖` over the
    /// antennas; the receiver slices directly.
    MrtPrecode,
}

impl BerMode {
    pub fn name(self) -> &'static str {
        match self {
            BerMode::Equalize => "equalize",
            BerMode::MrtPrecode => "mrt_precode",
        }
    }
}

/// Monte-Carlo bit-error-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub snr_points_db: Vec<f64>,
    pub ber: Vec<f64>,
    pub bit_errors: Vec<u64>,
    pub bits_per_point: u64,
    pub mode: BerMode,
}

impl BerCurve {
    /// Binomial standard error of point `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        let p = self.ber[i];
        (p * (1.0 - p) / self.bits_per_point as f64).sqrt()
    }

    /// SNR in dB where the curve first crosses `target`, interpolating
    /// linearly in `log10(BER)` between the bracketing grid points.
    pub fn snr_at_ber(&self, target: f64) -> Option<f64> {
        let floor = 0.5 / self.bits_per_point as f64;
        let log = |p: f64| p.max(floor).log10();
        (1..self.ber.len()).find_map(|i| {
            let (p0, p1) = (self.ber[i - 1], self.ber[i]);
            if p0 > target && p1 <= target {
                let (x0, x1) = (self.snr_points_db[i - 1], self.snr_points_db[i]);
                let t = (log(p0) - target.log10()) / (log(p0) - log(p1));
                Some(x0 + t * (x1 - x0))
            } else {
                None
            }
        })
    }

    /// BER at `snr_db`, interpolated log-linearly.
    pub fn ber_at_snr(&self, snr_db: f64) -> Option<f64> {
        let floor = 0.5 / self.bits_per_point as f64;
        let i = self.snr_points_db.iter().position(|&s| s >= snr_db)?;
        if self.snr_points_db[i] == snr_db {
            return Some(self.ber[i]);
        }
        if i == 0 {
            return None;
        }
        let (x0, x1) = (self.snr_points_db[i - 1], self.snr_points_db[i]);
        let (l0, l1) = (self.ber[i - 1].max(floor).log10(), self.ber[i].max(floor).log10());
        Some(10f64.powf(l0 + (snr_db - x0) / (x1 - x0) * (l1 - l0)))
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Closed-form uncoded Gray-QPSK bit-error rate at `Es/N0 = snr_db`.
pub fn qpsk_ber_theory(snr_db: f64) -> f64 {
    q_function(10f64.powf(snr_db / 10.0).sqrt())
}

const MIN_BITS: u64 = 10_000;
const SYMBOLS_PER_CHUNK: u64 = 4096;

/// Monte-Carlo uncoded QPSK over the channels in `truth`, precoding or
/// equalizing with `used`.
///
/// Symbols cycle through the links in order (every entry in equalize mode,
/// every (sample, subcarrier) pair in MRT mode). The SNR of each grid point
/// is the per-symbol `Es/N0` of one link: the noise power is the link's mean
/// per-antenna channel power divided by the linear SNR, so MRT shows the
/// array gain and a perfect SISO link reproduces [`qpsk_ber_theory`].
/// `f64::INFINITY` in the grid means noiseless.
pub fn ber_qpsk(
    truth: &[CsiMatrix],
    used: &[CsiMatrix],
    snr_grid_db: &[f64],
    n_bits: u64,
    mode: BerMode,
    seed: u64,
) -> Result<BerCurve> {
    if n_bits < MIN_BITS {
        return Err(Error::domain(format!("at least {MIN_BITS} bits per point are required, got {n_bits}")));
    }
    if truth.len() != used.len() {
        return Err(Error::shape(format!("{} samples", truth.len()), format!("{} samples", used.len())));
    }
    if truth.is_empty() {
        return Err(Error::domain("no channels to simulate"));
    }
    let (m, n) = truth[0].dims();
    for h in truth.iter().chain(used) {
        h.ensure_dims(m, n)?;
    }
    if snr_grid_db.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("SNR grid contains NaN"));
    }

    let links = build_links(truth, used, mode);
    let n_symbols = n_bits.div_ceil(2);
    let bits = 2 * n_symbols;
    let chunks = n_symbols.div_ceil(SYMBOLS_PER_CHUNK);

    let bit_errors: Vec<u64> = snr_grid_db
        .iter()
        .enumerate()
        .map(|(pi, &snr_db)| {
            let snr = 10f64.powf(snr_db / 10.0);
            let point_seed = derive(seed, pi as u64);
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = substream(point_seed, c);
                    let start = c * SYMBOLS_PER_CHUNK;
                    let end = (start + SYMBOLS_PER_CHUNK).min(n_symbols);
                    (start..end)
                        .map(|s| links[(s % links.len() as u64) as usize].errors(snr, &mut rng))
                        .sum::<u64>()
                })
                .sum()
        })
        .collect();

    Ok(BerCurve {
        snr_points_db: snr_grid_db.to_vec(),
        ber: bit_errors.iter().map(|&e| e as f64 / bits as f64).collect(),
        bit_errors,
        bits_per_point: bits,
        mode,
    })
}

/// One scalar link `y = gain · s + n` sliced after multiplying by `rx`.
struct Link {
    gain: Complex64,
    rx: Complex64,
    /// Reference power; the noise power is `power / snr`.
    power: f64,
}

impl Link {
    fn errors<R: Rng>(&self, snr: f64, rng: &mut R) -> u64 {
        let bits: u32 = rng.random();
        let (b0, b1) = (bits & 1 == 1, bits & 2 == 2);
        let s = Complex64::new(if b0 { -1.0 } else { 1.0 }, if b1 { -1.0 } else { 1.0 })
            * std::f64::consts::FRAC_1_SQRT_2;
        let n0 = self.power / snr;
        let noise = if n0 > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * (n0 / 2.0).sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        };
        let z = (self.gain * s + noise) * self.rx;
        ((z.re < 0.0) != b0) as u64 + ((z.im < 0.0) != b1) as u64
    }
}

fn build_links(truth: &[CsiMatrix], used: &[CsiMatrix], mode: BerMode) -> Vec<Link> {
    let (m, n) = truth[0].dims();
    let mut links = Vec::new();
    match mode {
        BerMode::Equalize => {
            for (h, u) in truth.iter().zip(used) {
                for (&h, &u) in h.as_slice().iter().zip(u.as_slice()) {
                    // y / ĥ has the same decision regions as y · conj(ĥ)
                    links.push(Link {
                        gain: h,
                        rx: u.conj(),
                        power: h.norm_sqr(),
                    });
                }
            }
        }
        BerMode::MrtPrecode => {
            for (h, u) in truth.iter().zip(used) {
                for k in 0..n {
                    let hk: Vec<Complex64> = (0..m).map(|a| h.get(a, k)).collect();
                    let uk: Vec<Complex64> = (0..m).map(|a| u.get(a, k)).collect();
                    let un = uk.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let gain = if un > 0.0 {
                        hk.iter().zip(&uk).map(|(h, u)| h * u.conj()).sum::<Complex64>() / un
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    links.push(Link {
                        gain,
                        rx: Complex64::new(1.0, 0.0),
                        power: hk.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64,
                    });
                }
            }
        }
    }
    links
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(m: usize) -> Vec<CsiMatrix> {
        vec![CsiMatrix::from_vec(m, 1, (0..m).map(|a| Complex64::from_polar(1.0, a as f64)).collect()).unwrap()]
    }

    #[test]
    fn q_function_reference_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        for (x, q) in [(1.0, 0.158_655_253_931_457_07), (3.0, 0.001_349_898_031_630_095_7)] {
            assert!((q_function(x) / q - 1.0).abs() < 1e-9, "{}", q_function(x));
        }
    }

    #[test]
    fn perfect_siso_matches_closed_form() {
        let h = flat(1);
        let grid: Vec<f64> = (0..=10).map(f64::from).collect();
        let curve = ber_qpsk(&h, &h, &grid, 200_000, BerMode::Equalize, 9).unwrap();
        for (i, &snr) in grid.iter().enumerate() {
            let theory = qpsk_ber_theory(snr);
            let se = (theory * (1.0 - theory) / curve.bits_per_point as f64).sqrt();
            assert!((curve.ber[i] - theory).abs() < 4.0 * se, "{snr} dB: {} vs {theory}", curve.ber[i]);
        }
    }

    #[test]
    fn noiseless_perfect_csi_is_error_free() {
        for (m, mode) in [(1, BerMode::Equalize), (4, BerMode::MrtPrecode)] {
            let h = flat(m);
            let curve = ber_qpsk(&h, &h, &[f64::INFINITY], 10_000, mode, 1).unwrap();
            assert_eq!(curve.bit_errors, vec![0]);
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let h = flat(2);
        let a = ber_qpsk(&h, &h, &[3.0, 6.0], 20_000, BerMode::MrtPrecode, 5).unwrap();
        let b = ber_qpsk(&h, &h, &[3.0, 6.0], 20_000, BerMode::MrtPrecode, 5).unwrap();
        assert_eq!(a, b);
        assert!(ber_qpsk(&h, &h, &[3.0], 100, BerMode::Equalize, 5).is_err());
        assert!(ber_qpsk(&h, &flat(1), &[3.0], 20_000, BerMode::Equalize, 5).is_err());
    }

    #[test]
    fn interpolation() {
        let curve = BerCurve {
            snr_points_db: vec![0.0, 1.0, 2.0],
            ber: vec![1e-1, 1e-2, 1e-3],
            bit_errors: vec![0; 3],
            bits_per_point: 1_000_000,
            mode: BerMode::Equalize,
        };
        assert!((curve.snr_at_ber(10f64.powf(-1.5)).unwrap() - 0.5).abs() < 1e-12);
        assert!((curve.snr_at_ber(1e-3).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(curve.snr_at_ber(1e-4), None);
        assert!((curve.ber_at_snr(1.5).unwrap() - 10f64.powf(-2.5)).abs() < 1e-15);
    }
}
