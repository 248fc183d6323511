//! Layer kinds and their batched forward / backward passes.
//!
//! Activations are stored per sample in row-major, channels-last order: a
//! tensor of shape `[len, ch]` keeps element `(t, c)` at `t * ch + c`, and a
//! batch is the concatenation of its samples.

use serde::{Deserialize, Serialize};

use super::gemm::gemm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Dense { units: usize },
    /// Same-length padding, stride 1.
    Conv1d { filters: usize, kernel_size: usize },
    /// Non-overlapping windows.
    AvgPool1d { pool_size: usize },
    Flatten,
    Reshape { dims: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::Dense { units },
            activation,
        }
    }

    pub fn conv1d(filters: usize, kernel_size: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::Conv1d {
                filters,
                kernel_size,
            },
            activation,
        }
    }

    pub fn avg_pool(pool_size: usize) -> Self {
        LayerSpec {
            kind: LayerKind::AvgPool1d { pool_size },
            activation: Activation::Linear,
        }
    }

    pub fn flatten() -> Self {
        LayerSpec {
            kind: LayerKind::Flatten,
            activation: Activation::Linear,
        }
    }

    pub fn reshape(dims: Vec<usize>) -> Self {
        LayerSpec {
            kind: LayerKind::Reshape { dims },
            activation: Activation::Linear,
        }
    }

    /// Output shape for a given input shape, or an error if the layer cannot
    /// accept it.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let numel: usize = input.iter().product();
        match &self.kind {
            LayerKind::Dense { units } => {
                if input.len() != 1 {
                    return Err(Error::shape("rank-1 input for dense", format!("{input:?}")));
                }
                if *units == 0 {
                    return Err(Error::domain("dense layer needs at least one unit"));
                }
                Ok(vec![*units])
            }
            LayerKind::Conv1d {
                filters,
                kernel_size,
            } => {
                if input.len() != 2 {
                    return Err(Error::shape("[len, channels] for conv1d", format!("{input:?}")));
                }
                if *filters == 0 || *kernel_size == 0 {
                    return Err(Error::domain("conv1d needs filters and kernel size > 0"));
                }
                Ok(vec![input[0], *filters])
            }
            LayerKind::AvgPool1d { pool_size } => {
                if input.len() != 2 {
                    return Err(Error::shape("[len, channels] for pooling", format!("{input:?}")));
                }
                if *pool_size == 0 || input[0] < *pool_size {
                    return Err(Error::domain(format!(
                        "pool size {pool_size} incompatible with length {}",
                        input[0]
                    )));
                }
                Ok(vec![input[0] / pool_size, input[1]])
            }
            LayerKind::Flatten => Ok(vec![numel]),
            LayerKind::Reshape { dims } => {
                if dims.iter().product::<usize>() != numel || dims.is_empty() {
                    return Err(Error::shape(
                        format!("reshape target with {numel} elements"),
                        format!("{dims:?}"),
                    ));
                }
                Ok(dims.clone())
            }
        }
    }
}

/// A layer instance bound to concrete shapes, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    /// Dense: `in x units`; conv: `(kernel * in_ch) x filters`. Row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Per-layer intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// im2col patches for conv layers.
    patches: Vec<f64>,
    /// Pre-activation output when the activation is non-linear.
    pre_activation: Vec<f64>,
}

impl Layer {
    pub fn new(spec: LayerSpec, input_shape: &[usize]) -> Result<Self> {
        let output_shape = spec.output_shape(input_shape)?;
        let (nw, nb) = match &spec.kind {
            LayerKind::Dense { units } => (input_shape[0] * units, *units),
            LayerKind::Conv1d {
                filters,
                kernel_size,
            } => (kernel_size * input_shape[1] * filters, *filters),
            _ => (0, 0),
        };
        Ok(Layer {
            spec,
            input_shape: input_shape.to_vec(),
            output_shape,
            weights: vec![0.0; nw],
            bias: vec![0.0; nb],
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output_shape.iter().product()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Number of inputs feeding each output unit.
    pub fn fan_in(&self) -> usize {
        match &self.spec.kind {
            LayerKind::Dense { .. } => self.input_shape[0],
            LayerKind::Conv1d { kernel_size, .. } => kernel_size * self.input_shape[1],
            _ => 0,
        }
    }

    fn conv_geometry(&self) -> (usize, usize, usize, usize, usize) {
        let LayerKind::Conv1d {
            filters,
            kernel_size,
        } = self.spec.kind
        else {
            unreachable!("conv geometry on non-conv layer")
        };
        let len = self.input_shape[0];
        let cin = self.input_shape[1];
        let pad_left = (kernel_size - 1) / 2;
        (len, cin, filters, kernel_size, pad_left)
    }

    fn im2col(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let (len, cin, _, k, pad) = self.conv_geometry();
        let row = k * cin;
        let mut p = vec![0.0; batch * len * row];
        for b in 0..batch {
            let xs = &x[b * len * cin..(b + 1) * len * cin];
            for t in 0..len {
                let dst = &mut p[(b * len + t) * row..(b * len + t + 1) * row];
                for j in 0..k {
                    let src = t as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < len {
                        let s = src as usize * cin;
                        dst[j * cin..(j + 1) * cin].copy_from_slice(&xs[s..s + cin]);
                    }
                }
            }
        }
        p
    }

    fn col2im(&self, dp: &[f64], batch: usize) -> Vec<f64> {
        let (len, cin, _, k, pad) = self.conv_geometry();
        let row = k * cin;
        let mut dx = vec![0.0; batch * len * cin];
        for b in 0..batch {
            let dxs = &mut dx[b * len * cin..(b + 1) * len * cin];
            for t in 0..len {
                let src = &dp[(b * len + t) * row..(b * len + t + 1) * row];
                for j in 0..k {
                    let pos = t as isize + j as isize - pad as isize;
                    if pos >= 0 && (pos as usize) < len {
                        let d = pos as usize * cin;
                        for c in 0..cin {
                            dxs[d + c] += src[j * cin + c];
                        }
                    }
                }
            }
        }
        dx
    }

    /// Forward pass over `batch` samples. Returns the output and, when
    /// `keep_cache` is set, what the backward pass needs.
    pub(crate) fn forward(
        &self,
        x: &[f64],
        batch: usize,
        keep_cache: bool,
    ) -> (Vec<f64>, Option<LayerCache>) {
        let mut patches = Vec::new();
        let mut z = match &self.spec.kind {
            LayerKind::Dense { units } => {
                let nin = self.input_shape[0];
                let mut z = self.bias.repeat(batch);
                gemm(batch, nin, *units, 1.0, x, false, &self.weights, false, 1.0, &mut z);
                z
            }
            LayerKind::Conv1d { filters, .. } => {
                let (len, cin, _, k, _) = self.conv_geometry();
                let p = self.im2col(x, batch);
                let mut z = self.bias.repeat(batch * len);
                gemm(batch * len, k * cin, *filters, 1.0, &p, false, &self.weights, false, 1.0, &mut z);
                if keep_cache {
                    patches = p;
                }
                z
            }
            LayerKind::AvgPool1d { pool_size } => {
                let (len, ch) = (self.input_shape[0], self.input_shape[1]);
                let out_len = self.output_shape[0];
                let scale = 1.0 / *pool_size as f64;
                let mut z = vec![0.0; batch * out_len * ch];
                for b in 0..batch {
                    let xs = &x[b * len * ch..(b + 1) * len * ch];
                    let zs = &mut z[b * out_len * ch..(b + 1) * out_len * ch];
                    for t in 0..out_len {
                        for i in 0..*pool_size {
                            let src = &xs[(t * pool_size + i) * ch..(t * pool_size + i + 1) * ch];
                            for c in 0..ch {
                                zs[t * ch + c] += src[c] * scale;
                            }
                        }
                    }
                }
                z
            }
            LayerKind::Flatten | LayerKind::Reshape { .. } => x.to_vec(),
        };
        let mut pre_activation = Vec::new();
        if self.spec.activation == Activation::Relu {
            if keep_cache {
                pre_activation = z.clone();
            }
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let cache = keep_cache.then_some(LayerCache {
            patches,
            pre_activation,
        });
        (z, cache)
    }

    /// Backward pass. `dy` is dLoss/dOutput; gradients are accumulated into
    /// `gw` / `gb` and dLoss/dInput is returned.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        cache: &LayerCache,
        mut dy: Vec<f64>,
        batch: usize,
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> Vec<f64> {
        if self.spec.activation == Activation::Relu {
            for (d, z) in dy.iter_mut().zip(&cache.pre_activation) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        match &self.spec.kind {
            LayerKind::Dense { units } => {
                let nin = self.input_shape[0];
                gemm(nin, batch, *units, 1.0, x, true, &dy, false, 1.0, gw);
                for row in dy.chunks_exact(*units) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
                let mut dx = vec![0.0; batch * nin];
                gemm(batch, *units, nin, 1.0, &dy, false, &self.weights, true, 0.0, &mut dx);
                dx
            }
            LayerKind::Conv1d { filters, .. } => {
                let (len, cin, _, k, _) = self.conv_geometry();
                let rows = batch * len;
                gemm(k * cin, rows, *filters, 1.0, &cache.patches, true, &dy, false, 1.0, gw);
                for row in dy.chunks_exact(*filters) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
                let mut dp = vec![0.0; rows * k * cin];
                gemm(rows, *filters, k * cin, 1.0, &dy, false, &self.weights, true, 0.0, &mut dp);
                self.col2im(&dp, batch)
            }
            LayerKind::AvgPool1d { pool_size } => {
                let (len, ch) = (self.input_shape[0], self.input_shape[1]);
                let out_len = self.output_shape[0];
                let scale = 1.0 / *pool_size as f64;
                let mut dx = vec![0.0; batch * len * ch];
                for b in 0..batch {
                    let ds = &dy[b * out_len * ch..(b + 1) * out_len * ch];
                    let dxs = &mut dx[b * len * ch..(b + 1) * len * ch];
                    for t in 0..out_len {
                        for i in 0..*pool_size {
                            let base = (t * pool_size + i) * ch;
                            for c in 0..ch {
                                dxs[base + c] = ds[t * ch + c] * scale;
                            }
                        }
                    }
                }
                dx
            }
            LayerKind::Flatten | LayerKind::Reshape { .. } => dy,
        }
    }
}
