//! Helpers shared by the integration tests.

#![allow(dead_code)]

use fddpred::nn::{Loss, NetworkModel};

/// Largest relative error between backprop and central differences over
/// (about `per_tensor`) sampled parameters of every tensor.
///
/// A parameter whose step crosses a ReLU kink is skipped: there the two
/// one-sided differences disagree and the central difference is not a
/// derivative of anything. Returns `(worst, checked, skipped)`.
pub fn finite_difference_error(
    model: &NetworkModel,
    x: &[f64],
    y: &[f64],
    batch: usize,
    loss: &Loss,
    per_tensor: usize,
) -> (f64, usize, usize) {
    let (_, grads) = model.gradients(x, y, batch, loss).unwrap();
    let h = 1e-6;
    let base = model.loss(x, y, batch, loss).unwrap();
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for li in 0..model.layers().len() {
        let nw = model.layers()[li].weights.len();
        let nb = model.layers()[li].bias.len();
        for (is_bias, count) in [(false, nw), (true, nb)] {
            for j in (0..count).step_by(1 + count / per_tensor.max(1)) {
                let eval = |delta: f64| {
                    let mut m = model.clone();
                    let l = &mut m.layers_mut()[li];
                    if is_bias {
                        l.bias[j] += delta;
                    } else {
                        l.weights[j] += delta;
                    }
                    m.loss(x, y, batch, loss).unwrap()
                };
                let (up, down) = (eval(h), eval(-h));
                let numeric = (up - down) / (2.0 * h);
                let forward = (up - base) / h;
                let backward = (base - down) / h;
                let scale = 1e-6 + numeric.abs();
                if (forward - backward).abs() > 1e-3 * scale + 1e-7 {
                    skipped += 1;
                    continue;
                }
                let analytic = if is_bias { grads.bias[li][j] } else { grads.weights[li][j] };
                let err = (numeric - analytic).abs() / (1e-6 + numeric.abs().max(analytic.abs()));
                worst = worst.max(err);
                checked += 1;
            }
        }
    }
    (worst, checked, skipped)
}

/// Deterministic, smoothly varying test inputs.
pub fn inputs(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| (i as f64 * 0.7 + seed as f64).sin() * 1.3 + 0.2)
        .collect()
}
