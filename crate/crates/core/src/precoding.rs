//! Multi-user downlink evaluation with MRT and ZF precoding.
//!
//! Per used subcarrier `k` the users see `y = H_k W_k / ‖W_k‖_F x + n`. The
//! precoder is built from predicted CSI `Ĥ_k`, the SINR is evaluated on the
//! true `H_k`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CsiMatrix;
use crate::dataset::CsiDataset;
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::rng::substream;

/// Per-subcarrier `users x antennas` channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserChannel {
    matrices: Vec<DMatrix<Complex64>>,
    users: usize,
    antennas: usize,
}

impl MultiUserChannel {
    pub fn new(matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let (users, antennas) = matrices.first().map(|h| h.shape()).unwrap_or((0, 0));
        for (k, h) in matrices.iter().enumerate() {
            if h.shape() != (users, antennas) {
                return Err(Error::shape(
                    format!("{users}x{antennas}"),
                    format!("{}x{} at subcarrier {k}", h.nrows(), h.ncols()),
                ));
            }
        }
        Ok(MultiUserChannel {
            matrices,
            users,
            antennas,
        })
    }

    /// Stacks one CSI matrix per user (antennas x subcarriers each).
    pub fn from_users(users: &[&CsiMatrix]) -> Result<Self> {
        let Some(first) = users.first() else {
            return Err(Error::domain("need at least one user"));
        };
        let (m, n) = first.dims();
        for u in users {
            u.ensure_dims(m, n)?;
        }
        let matrices = (0..n)
            .map(|k| DMatrix::from_fn(users.len(), m, |u, a| users[u].get(a, k)))
            .collect();
        MultiUserChannel::new(matrices)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<Complex64> {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderKind {
    Mrt,
    Zf,
}

impl PrecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            PrecoderKind::Mrt => "mrt",
            PrecoderKind::Zf => "zf",
        }
    }
}

/// `W_k = Ĥ_k^H` (antennas x users).
pub fn mrt_weights(h_hat: &MultiUserChannel) -> Vec<DMatrix<Complex64>> {
    h_hat.matrices.iter().map(|h| h.adjoint()).collect()
}

/// `W_k = Ĥ_k^H (Ĥ_k Ĥ_k^H)^{-1}`, the right pseudo-inverse.
///
/// Fails when there are more users than antennas, or lists every subcarrier
/// whose Gram matrix is numerically singular.
pub fn zf_weights(h_hat: &MultiUserChannel) -> Result<Vec<DMatrix<Complex64>>> {
    if h_hat.users > h_hat.antennas {
        return Err(Error::domain(format!(
            "zero forcing needs users <= antennas, got {} users on {} antennas",
            h_hat.users, h_hat.antennas
        )));
    }
    let solved: Vec<Option<DMatrix<Complex64>>> = h_hat
        .matrices
        .par_iter()
        .map(|h| {
            let hh = h.adjoint();
            let gram = h * &hh;
            let max_diag = (0..gram.nrows()).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
            let ch = gram.cholesky()?;
            let l = ch.l_dirty();
            let min_pivot = (0..l.nrows()).map(|i| l[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
            if !(min_pivot > 1e-12 * max_diag) {
                return None;
            }
            Some(hh * ch.inverse())
        })
        .collect();
    let singular: Vec<usize> = solved.iter().enumerate().filter(|(_, w)| w.is_none()).map(|(k, _)| k).collect();
    if !singular.is_empty() {
        return Err(Error::Singular { subcarriers: singular });
    }
    Ok(solved.into_iter().flatten().collect())
}

pub fn precoder_weights(kind: PrecoderKind, h_hat: &MultiUserChannel) -> Result<Vec<DMatrix<Complex64>>> {
    match kind {
        PrecoderKind::Mrt => Ok(mrt_weights(h_hat)),
        PrecoderKind::Zf => zf_weights(h_hat),
    }
}

/// Divides each `W_k` by its Frobenius norm; all-zero matrices stay zero.
pub fn normalize_weights(w: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    w.iter()
        .map(|wk| {
            let f = wk.norm();
            if f > 0.0 {
                wk.unscale(f)
            } else {
                wk.clone()
            }
        })
        .collect()
}

/// SINR of every user on every subcarrier, laid out `[k * users + u]`.
///
/// `w` is normalized per subcarrier first (a no-op for normalized input), so
/// `SINR_k(u) = |h_{k,u} w_{k,u}|² / (Σ_{j≠u} |h_{k,u} w_{k,j}|² + σ²)`.
pub fn sinr_per_user(h_true: &MultiUserChannel, w: &[DMatrix<Complex64>], sigma2: f64) -> Result<Vec<f64>> {
    if w.len() != h_true.subcarriers() {
        return Err(Error::shape(format!("{} precoders", h_true.subcarriers()), format!("{}", w.len())));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::domain(format!("noise variance must be >= 0, got {sigma2}")));
    }
    let users = h_true.users;
    let mut out = Vec::with_capacity(users * w.len());
    for (h, wk) in h_true.matrices.iter().zip(normalize_weights(w)) {
        if wk.shape() != (h_true.antennas, users) {
            return Err(Error::shape(
                format!("{}x{}", h_true.antennas, users),
                format!("{}x{}", wk.nrows(), wk.ncols()),
            ));
        }
        let g = h * wk;
        for u in 0..users {
            let signal = g[(u, u)].norm_sqr();
            let interference: f64 = (0..users).filter(|&j| j != u).map(|j| g[(u, j)].norm_sqr()).sum();
            let denom = interference + sigma2;
            out.push(if denom > 0.0 { signal / denom } else if signal > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    Ok(out)
}

/// `(1/N_sub) Σ_k Σ_u log2(1 + SINR_k(u))` for the `[k * users + u]` layout.
pub fn sum_rate(sinr: &[f64], subcarriers: usize) -> f64 {
    if subcarriers == 0 {
        return 0.0;
    }
    sinr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / subcarriers as f64
}

/// Outcome of precoding over one or more user groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecodingReport {
    pub precoder: PrecoderKind,
    pub sigma2: f64,
    pub users: usize,
    /// Per draw, SINR in the `[k * users + u]` layout.
    pub sinr: Vec<Vec<f64>>,
    /// Sum-rate of each draw, bits/s/Hz.
    pub sum_rates: Vec<f64>,
    /// Mean of `sum_rates`.
    pub sum_rate: f64,
}

/// Precodes one user group with `h_hat` and evaluates on `h_true`.
pub fn precode_group(
    h_true: &MultiUserChannel,
    h_hat: &MultiUserChannel,
    kind: PrecoderKind,
    sigma2: f64,
) -> Result<Vec<f64>> {
    if h_true.users != h_hat.users || h_true.antennas != h_hat.antennas || h_true.subcarriers() != h_hat.subcarriers() {
        return Err(Error::shape("matching true and predicted channels", "different dimensions"));
    }
    sinr_per_user(h_true, &precoder_weights(kind, h_hat)?, sigma2)
}

/// Noise variance giving `snr_db` relative to the mean per-entry power of
/// `truth`.
pub fn sigma2_for_snr(truth: &[CsiMatrix], snr_db: f64) -> Result<f64> {
    let count: usize = truth.iter().map(CsiMatrix::len).sum();
    if count == 0 {
        return Err(Error::domain("no channels to take the power of"));
    }
    let power = truth.iter().map(CsiMatrix::energy).sum::<f64>() / count as f64;
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// Draws `draws` groups of `n_users` distinct samples and reports the sum-rate
/// obtained by precoding on `predicted` and, as the upper bound, on `truth`.
pub fn evaluate_predictions(
    truth: &[CsiMatrix],
    predicted: &[CsiMatrix],
    kind: PrecoderKind,
    n_users: usize,
    sigma2: f64,
    draws: usize,
    seed: u64,
) -> Result<(PrecodingReport, PrecodingReport)> {
    if truth.len() != predicted.len() {
        return Err(Error::shape(format!("{} predictions", truth.len()), format!("{}", predicted.len())));
    }
    if n_users == 0 || truth.len() < n_users {
        return Err(Error::domain(format!("need at least {n_users} >= 1 samples, have {}", truth.len())));
    }
    // Per draw: SINRs with predicted CSI, SINRs with true CSI, subcarriers.
    type Draw = (Vec<f64>, Vec<f64>, usize);
    let results: Vec<Draw> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = substream(seed, d as u64);
            let group = sample(&mut rng, truth.len(), n_users).into_vec();
            let h = MultiUserChannel::from_users(&group.iter().map(|&i| &truth[i]).collect::<Vec<_>>())?;
            let h_hat = MultiUserChannel::from_users(&group.iter().map(|&i| &predicted[i]).collect::<Vec<_>>())?;
            let pred = precode_group(&h, &h_hat, kind, sigma2)?;
            let bound = precode_group(&h, &h, kind, sigma2)?;
            Ok((pred, bound, h.subcarriers()))
        })
        .collect::<Result<_>>()?;
    let report = |pick: fn(&Draw) -> &Vec<f64>| {
        let sum_rates: Vec<f64> = results.iter().map(|r| sum_rate(pick(r), r.2)).collect();
        PrecodingReport {
            precoder: kind,
            sigma2,
            users: n_users,
            sinr: results.iter().map(|r| pick(r).clone()).collect(),
            sum_rate: if sum_rates.is_empty() { 0.0 } else { sum_rates.iter().sum::<f64>() / sum_rates.len() as f64 },
            sum_rates,
        }
    };
    Ok((report(|r| &r.0), report(|r| &r.1)))
}

/// Runs `predictor` on the uplink of `dataset` and evaluates against its
/// downlink. See [`evaluate_predictions`].
pub fn evaluate_predictor(
    dataset: &CsiDataset,
    predictor: &dyn Predictor,
    kind: PrecoderKind,
    n_users: usize,
    sigma2: f64,
    draws: usize,
    seed: u64,
) -> Result<(PrecodingReport, PrecodingReport)> {
    let predicted = predictor.predict_batch(&dataset.uplink())?;
    evaluate_predictions(&dataset.downlink(), &predicted, kind, n_users, sigma2, draws, seed)
}
