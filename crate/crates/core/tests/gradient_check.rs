//! Finite-difference oracle for backpropagation.

mod common;

use common::{finite_difference_error, inputs};
use fddpred::nn::{Activation, LayerSpec, Loss, LossKind, NetworkModel};

fn numeric_check(model: NetworkModel, x: &[f64], y: &[f64], batch: usize, loss: Loss) {
    let (worst, checked, skipped) = finite_difference_error(&model, x, y, batch, &loss, 40);
    assert!(checked > 10 * skipped, "{skipped} of {} parameters sit on a kink", checked + skipped);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn dense_stack_matches_finite_differences() {
    let model = NetworkModel::new(
        vec![3],
        vec![
            LayerSpec::dense(7, Activation::Relu),
            LayerSpec::dense(5, Activation::Relu),
            LayerSpec::dense(4, Activation::Linear),
        ],
    )
    .unwrap()
    .with_init(11);
    let batch = 5;
    let x = inputs(3 * batch, 1);
    let y = inputs(4 * batch, 2);
    numeric_check(model.clone(), &x, &y, batch, Loss::nmse());
    numeric_check(
        model,
        &x,
        &y,
        batch,
        Loss {
            kind: LossKind::Mse,
            scale: 1.0,
        },
    );
}

#[test]
fn conv_pool_stack_matches_finite_differences() {
    let model = NetworkModel::new(
        vec![16, 2],
        vec![
            LayerSpec::conv1d(4, 6, Activation::Relu),
            LayerSpec::avg_pool(4),
            LayerSpec::conv1d(3, 3, Activation::Relu),
            LayerSpec::flatten(),
            LayerSpec::dense(6, Activation::Relu),
            LayerSpec::dense(32, Activation::Linear),
            LayerSpec::reshape(vec![16, 2]),
        ],
    )
    .unwrap()
    .with_init(5);
    let batch = 3;
    let x = inputs(32 * batch, 3);
    let y = inputs(32 * batch, 4);
    numeric_check(model, &x, &y, batch, Loss::nmse());
}
