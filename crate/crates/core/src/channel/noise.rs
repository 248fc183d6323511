use rand::Rng;
use rand_distr::StandardNormal;

use super::CsiMatrix;
use crate::rng::rng_from_seed;

/// Per-real-dimension noise variance `sigma^2` such that
/// `power / (2 sigma^2)` equals the target SNR. `power` is the mean
/// per-entry energy of the clean signal. Returns 0 for an infinite SNR.
pub fn awgn_sigma2(power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    power / (2.0 * 10f64.powf(snr_db / 10.0))
}

/// Adds circular complex Gaussian noise at `snr_db`, where the SNR is the
/// mean per-entry energy of `csi` over the complex noise energy `2 sigma^2`.
/// `f64::INFINITY` returns the input unchanged.
pub fn add_awgn(csi: &CsiMatrix, snr_db: f64, seed: u64) -> CsiMatrix {
    let mut rng = rng_from_seed(seed);
    add_awgn_with(csi, snr_db, &mut rng)
}

pub fn add_awgn_with<R: Rng + ?Sized>(csi: &CsiMatrix, snr_db: f64, rng: &mut R) -> CsiMatrix {
    let sigma2 = awgn_sigma2(csi.mean_power(), snr_db);
    if sigma2 == 0.0 {
        return csi.clone();
    }
    let sigma = sigma2.sqrt();
    let mut out = csi.clone();
    for v in out.as_mut_slice() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        v.re += sigma * re;
        v.im += sigma * im;
    }
    out
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    #[test]
    fn infinite_snr_is_identity() {
        let h = CsiMatrix::from_vec(1, 3, vec![Complex64::new(0.3, -1.0); 3]).unwrap();
        assert_eq!(add_awgn(&h, f64::INFINITY, 9), h);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let h = CsiMatrix::from_vec(2, 4, vec![Complex64::new(1.0, 2.0); 8]).unwrap();
        assert_eq!(add_awgn(&h, 5.0, 42), add_awgn(&h, 5.0, 42));
        assert_ne!(add_awgn(&h, 5.0, 42), add_awgn(&h, 5.0, 43));
    }

    #[test]
    fn empirical_snr_matches_target() {
        let value = Complex64::new(0.6, -0.8);
        let n = 100_000;
        let h = CsiMatrix::from_vec(1, n, vec![value; n]).unwrap();
        let noisy = add_awgn(&h, 10.0, 3);
        // Estimate sigma^2 per real dimension from the residual.
        let sigma2_hat: f64 = noisy
            .as_slice()
            .iter()
            .map(|v| (v - value).norm_sqr())
            .sum::<f64>()
            / (2.0 * n as f64);
        let snr_db = 10.0 * (value.norm_sqr() / (2.0 * sigma2_hat)).log10();
        assert!((snr_db - 10.0).abs() < 0.1, "empirical snr {snr_db}");
    }
}
