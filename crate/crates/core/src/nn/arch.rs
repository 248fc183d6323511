//! Reference architectures.
//!
//! * [`build_los_net`]: dense regression for the single-coefficient
//!   line-of-sight task, input/output `[2]` (Re, Im).
//! * [`build_siso_net`]: convolutional trunk over a 1024-bin grid,
//!   input `[1024, 2]`, output `[1024, 2]`.
//! * [`build_mimo_net`]: the same trunk with antennas stacked as channels,
//!   input `[1024, 2M]`, output `[M, 1024, 2]`.
//!
//! The convolution kernel size is 6, which gives the two conv layers 416 and
//! 3088 parameters.

use super::layer::{Activation, LayerSpec};
use super::model::NetworkModel;
use crate::error::{Error, Result};

pub const CONV_KERNEL: usize = 6;
pub const POOL: usize = 4;
pub const GRID: usize = 1024;

pub fn build_los_net() -> NetworkModel {
    use Activation::*;
    NetworkModel::new(
        vec![2],
        vec![
            LayerSpec::dense(128, Relu),
            LayerSpec::dense(256, Relu),
            LayerSpec::dense(1024, Relu),
            LayerSpec::dense(256, Relu),
            LayerSpec::dense(128, Relu),
            LayerSpec::dense(2, Linear),
        ],
    )
    .expect("static LoS architecture is well-formed")
}

/// Convolutional trunk shared by the SISO and MIMO networks.
///
/// `grid` is the subcarrier grid length, `antennas` the number of stacked
/// antennas, `dense` the hidden dense widths. The output is reshaped to
/// `[grid, 2]` for one antenna and `[antennas, grid, 2]` otherwise.
pub fn build_conv_net(grid: usize, antennas: usize, dense: &[usize]) -> Result<NetworkModel> {
    use Activation::*;
    if antennas == 0 {
        return Err(Error::domain("need at least one antenna"));
    }
    if grid < POOL * POOL {
        return Err(Error::domain(format!("grid {grid} too short for two pooling stages")));
    }
    let mut specs = vec![
        LayerSpec::conv1d(32, CONV_KERNEL, Relu),
        LayerSpec::avg_pool(POOL),
        LayerSpec::conv1d(16, CONV_KERNEL, Relu),
        LayerSpec::avg_pool(POOL),
        LayerSpec::flatten(),
    ];
    specs.extend(dense.iter().map(|&w| LayerSpec::dense(w, Relu)));
    specs.push(LayerSpec::dense(antennas * grid * 2, Linear));
    let out = if antennas == 1 {
        vec![grid, 2]
    } else {
        vec![antennas, grid, 2]
    };
    specs.push(LayerSpec::reshape(out));
    NetworkModel::new(vec![grid, 2 * antennas], specs)
}

pub fn build_siso_net() -> NetworkModel {
    build_conv_net(GRID, 1, &[128, 128, 128]).expect("static SISO architecture is well-formed")
}

pub fn build_mimo_net(antennas: usize) -> Result<NetworkModel> {
    if antennas == 0 {
        return Err(Error::domain("need at least one antenna"));
    }
    let mut net = build_conv_net(GRID, antennas, &[16, 32, 64])?;
    if antennas == 1 {
        // Keep the explicit antenna axis for the degenerate case.
        let last = net.layers().len() - 1;
        let reshape = LayerSpec::reshape(vec![1, GRID, 2]);
        let mut specs: Vec<LayerSpec> = net.layers().iter().map(|l| l.spec.clone()).collect();
        specs[last] = reshape;
        net = NetworkModel::new(vec![GRID, 2], specs)?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn los_net_counts() {
        let net = build_los_net();
        assert_eq!(
            net.param_counts(),
            vec![384, 33_024, 263_168, 262_400, 32_896, 258]
        );
        assert_eq!(net.input_shape(), &[2]);
        assert_eq!(net.output_shape(), &[2]);
    }

    #[test]
    fn los_net_zero_input_is_finite() {
        let net = build_los_net().with_init(0);
        let y = net.forward_one(&[0.0, 0.0]).unwrap();
        assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn siso_counts_and_shapes() {
        let net = build_siso_net();
        let counts = net.param_counts();
        assert_eq!(&counts[..5], &[416, 0, 3088, 0, 0]);
        assert_eq!(&counts[5..9], &[131_200, 16_512, 16_512, 264_192]);
        assert_eq!(counts[9], 0);
        let shapes: Vec<Vec<usize>> = net.layers().iter().map(|l| l.output_shape.clone()).collect();
        assert_eq!(shapes[0], vec![1024, 32]);
        assert_eq!(shapes[1], vec![256, 32]);
        assert_eq!(shapes[2], vec![256, 16]);
        assert_eq!(shapes[3], vec![64, 16]);
        assert_eq!(shapes[4], vec![1024]);
        assert_eq!(net.output_shape(), &[1024, 2]);
    }

    #[test]
    fn mimo_structure() {
        let one = build_mimo_net(1).unwrap();
        assert_eq!(one.output_shape(), &[1, 1024, 2]);
        let big = build_mimo_net(64).unwrap();
        let last_dense = &big.layers()[big.layers().len() - 2];
        assert_eq!(last_dense.output_shape, vec![131_072]);
        assert_eq!(big.input_shape(), &[1024, 128]);

        // Only the input conv (channel count) and the output dense grow with M.
        let two = build_mimo_net(2).unwrap();
        let four = build_mimo_net(4).unwrap();
        let (c2, c4) = (two.param_counts(), four.param_counts());
        for i in 1..c2.len() - 2 {
            assert_eq!(c2[i], c4[i], "layer {i}");
        }
        assert!(c4[c4.len() - 2] > c2[c2.len() - 2]);
        assert!(build_mimo_net(0).is_err());
    }
}
