use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::CsiMatrix;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Extrapolates a line-of-sight coefficient from `f_ul` to `f_dl`.
///
/// The distance is recovered from the magnitude,
/// `d = c / (4π f_ul |h|^(1/β))`, and the coefficient is moved to the downlink
/// band by scaling the magnitude with `(f_ul/f_dl)^β` and advancing the phase
/// by `2π (f_dl - f_ul) d / c`. On inputs produced by the free-space model
/// this equals evaluating that model at `f_dl`; it is the identity when
/// `f_ul == f_dl`.
pub fn analytical_los_predict(h_ul: Complex64, f_ul: f64, f_dl: f64, beta: f64) -> Result<Complex64> {
    if !(f_ul > 0.0 && f_dl > 0.0 && f_ul.is_finite() && f_dl.is_finite()) {
        return Err(Error::domain(format!("frequencies must be positive, got {f_ul} and {f_dl}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("pathloss exponent must be positive, got {beta}")));
    }
    let mag = h_ul.norm();
    if mag == 0.0 || !mag.is_finite() {
        return Err(Error::domain("uplink coefficient must be finite and non-zero"));
    }
    let distance = SPEED_OF_LIGHT / (4.0 * PI * f_ul * mag.powf(1.0 / beta));
    let rotation = Complex64::from_polar(1.0, -2.0 * PI * (f_dl - f_ul) * distance / SPEED_OF_LIGHT);
    Ok(h_ul * (f_ul / f_dl).powf(beta) * rotation)
}

/// Applies [`analytical_los_predict`] entry-wise.
pub fn analytical_los_predict_csi(h_ul: &CsiMatrix, f_ul: f64, f_dl: f64, beta: f64) -> Result<CsiMatrix> {
    let values = h_ul
        .as_slice()
        .iter()
        .map(|&h| analytical_los_predict(h, f_ul, f_dl, beta))
        .collect::<Result<Vec<_>>>()?;
    CsiMatrix::from_vec(h_ul.antennas(), h_ul.subcarriers(), values)
}
