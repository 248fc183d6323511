//! Non-neural baselines: the closed-form line-of-sight extrapolator and the
//! Wiener (LMMSE) filter.

mod analytical;
mod wiener;

pub use analytical::{analytical_los_predict, analytical_los_predict_csi};
pub use wiener::{wiener_fit, wiener_fit_pairs, wiener_predict, WienerModel, WienerVariant};
