//! Scoring of predicted CSI against the true downlink.

mod ber;

pub use ber::{ber_qpsk, q_function, qpsk_ber_theory, BerCurve, BerMode};

use crate::channel::CsiMatrix;
use crate::error::{Error, Result};

fn check_pair(pred: &CsiMatrix, truth: &CsiMatrix) -> Result<()> {
    pred.ensure_dims(truth.antennas(), truth.subcarriers())
}

fn check_batch(pred: &[CsiMatrix], truth: &[CsiMatrix]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!("{} samples", truth.len()), format!("{} samples", pred.len())));
    }
    if truth.is_empty() {
        return Err(Error::domain("no samples to score"));
    }
    Ok(())
}

/// `‖h - ĥ‖² / ‖h‖²` for one sample.
pub fn nmse(pred: &CsiMatrix, truth: &CsiMatrix) -> Result<f64> {
    check_pair(pred, truth)?;
    let energy = truth.energy();
    if energy == 0.0 {
        return Err(Error::domain("nmse of an all-zero reference"));
    }
    let err: f64 = pred
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(p, t)| (p - t).norm_sqr())
        .sum();
    Ok(err / energy)
}

/// Per-sample NMSE averaged over the batch.
pub fn nmse_batch(pred: &[CsiMatrix], truth: &[CsiMatrix]) -> Result<f64> {
    check_batch(pred, truth)?;
    let total = pred.iter().zip(truth).map(|(p, t)| nmse(p, t)).sum::<Result<f64>>()?;
    Ok(total / truth.len() as f64)
}

/// Normalized inner-product magnitude `|⟨h, ĥ⟩| / (‖h‖ ‖ĥ‖)`, in `[0, 1]`.
///
/// Invariant to a common complex scaling of either argument.
pub fn corr_coeff(pred: &CsiMatrix, truth: &CsiMatrix) -> Result<f64> {
    check_pair(pred, truth)?;
    let (np, nt) = (pred.norm(), truth.norm());
    if np == 0.0 || nt == 0.0 {
        return Err(Error::domain("correlation with a zero vector is undefined"));
    }
    Ok((truth.inner(pred).norm() / (np * nt)).min(1.0))
}

/// Per-sample correlation coefficient averaged over the batch.
pub fn corr_coeff_batch(pred: &[CsiMatrix], truth: &[CsiMatrix]) -> Result<f64> {
    check_batch(pred, truth)?;
    let total = pred.iter().zip(truth).map(|(p, t)| corr_coeff(p, t)).sum::<Result<f64>>()?;
    Ok(total / truth.len() as f64)
}
