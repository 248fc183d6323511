use rand::Rng;
use rayon::prelude::*;

use super::layer::{Activation, Layer, LayerCache, LayerSpec};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Samples per parallel work unit when evaluating a batch. Fixed so that the
/// reduction order, and with it every floating-point result, is independent
/// of the thread count.
const CHUNK: usize = 32;

/// Ordered layer stack with parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean over samples of `||y - y_hat||^2 / ||y||^2`.
    Nmse,
    /// Mean over samples of `||y - y_hat||^2`.
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    pub kind: LossKind,
    /// Constant multiplier applied to the loss.
    pub scale: f64,
}

impl Loss {
    pub fn nmse() -> Self {
        Loss {
            kind: LossKind::Nmse,
            scale: 1.0,
        }
    }

    fn sample(&self, pred: &[f64], label: &[f64]) -> (f64, f64) {
        let err: f64 = pred.iter().zip(label).map(|(p, y)| (p - y) * (p - y)).sum();
        let denom = match self.kind {
            LossKind::Nmse => label.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE),
            LossKind::Mse => 1.0,
        };
        (err / denom, denom)
    }
}

/// Gradient tensors, one pair per layer (empty for parameter-free layers).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &NetworkModel) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias).flatten()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl NetworkModel {
    /// Chains the layer specs from `input_shape`; parameters start at zero.
    pub fn new(input_shape: Vec<usize>, specs: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::domain(format!("invalid input shape {input_shape:?}")));
        }
        let mut shape = input_shape.clone();
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            let layer = Layer::new(spec, &shape)
                .map_err(|e| Error::shape(format!("layer {i} input"), e.to_string()))?;
            shape = layer.output_shape.clone();
            layers.push(layer);
        }
        Ok(NetworkModel {
            input_shape,
            layers,
        })
    }

    /// Fan-in scaled uniform initialization; biases zero.
    pub fn init_weights(&mut self, seed: u64) {
        let mut rng = rng_from_seed(seed);
        for layer in &mut self.layers {
            if layer.weights.is_empty() {
                continue;
            }
            let fan_in = layer.fan_in() as f64;
            let limit = match layer.spec.activation {
                Activation::Relu => (6.0 / fan_in).sqrt(),
                Activation::Linear => (3.0 / fan_in).sqrt(),
            };
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn with_init(mut self, seed: u64) -> Self {
        self.init_weights(seed);
        self
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers
            .last()
            .map_or(&self.input_shape, |l| &l.output_shape)
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output_shape().iter().product()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Trainable parameters per layer, in order.
    pub fn param_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::param_count).collect()
    }

    pub fn num_params(&self) -> usize {
        self.param_counts().iter().sum()
    }

    fn check_batch(&self, x: &[f64], batch: usize) -> Result<()> {
        if x.len() != batch * self.input_len() {
            return Err(Error::shape(
                format!("{batch} x {:?}", self.input_shape),
                format!("{} values", x.len()),
            ));
        }
        Ok(())
    }

    fn forward_serial(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.forward(&a, batch, false).0;
        }
        a
    }

    /// Evaluates `batch` samples laid out back to back.
    pub fn forward(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_batch(x, batch)?;
        let nin = self.input_len();
        let out: Vec<Vec<f64>> = x
            .par_chunks(CHUNK * nin.max(1))
            .map(|chunk| self.forward_serial(chunk, chunk.len() / nin))
            .collect();
        Ok(out.concat())
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x, 1)
    }

    /// Mean batch loss without gradients.
    pub fn loss(&self, x: &[f64], y: &[f64], batch: usize, loss: &Loss) -> Result<f64> {
        let pred = self.forward(x, batch)?;
        self.check_labels(y, batch)?;
        let nout = self.output_len();
        let total: f64 = pred
            .chunks_exact(nout)
            .zip(y.chunks_exact(nout))
            .map(|(p, t)| loss.sample(p, t).0)
            .sum();
        Ok(loss.scale * total / batch as f64)
    }

    fn check_labels(&self, y: &[f64], batch: usize) -> Result<()> {
        if y.len() != batch * self.output_len() {
            return Err(Error::shape(
                format!("{batch} x {:?} labels", self.output_shape()),
                format!("{} values", y.len()),
            ));
        }
        Ok(())
    }

    /// Loss sum and gradient sum over one chunk, normalized by `total_batch`.
    fn chunk_gradients(
        &self,
        x: &[f64],
        y: &[f64],
        batch: usize,
        total_batch: usize,
        loss: &Loss,
    ) -> (f64, Gradients) {
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&a, batch, true);
            inputs.push(std::mem::replace(&mut a, out));
            caches.push(cache.expect("cache requested"));
        }
        let nout = self.output_len();
        let norm = loss.scale / total_batch as f64;
        let mut loss_sum = 0.0;
        let mut dy = vec![0.0; a.len()];
        for ((p, t), d) in a
            .chunks_exact(nout)
            .zip(y.chunks_exact(nout))
            .zip(dy.chunks_exact_mut(nout))
        {
            let (l, denom) = loss.sample(p, t);
            loss_sum += l;
            let g = 2.0 * norm / denom;
            for ((di, pi), ti) in d.iter_mut().zip(p).zip(t) {
                *di = g * (pi - ti);
            }
        }
        let mut grads = Gradients::zeros_like(self);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            dy = layer.backward(
                &inputs[i],
                &caches[i],
                dy,
                batch,
                &mut grads.weights[i],
                &mut grads.bias[i],
            );
        }
        (loss_sum, grads)
    }

    /// Exact gradients of the mean batch loss. Returns `(loss, gradients)`.
    pub fn gradients(
        &self,
        x: &[f64],
        y: &[f64],
        batch: usize,
        loss: &Loss,
    ) -> Result<(f64, Gradients)> {
        if batch == 0 {
            return Err(Error::domain("gradient batch must be non-empty"));
        }
        self.check_batch(x, batch)?;
        self.check_labels(y, batch)?;
        let (nin, nout) = (self.input_len(), self.output_len());
        let parts: Vec<(f64, Gradients)> = x
            .par_chunks(CHUNK * nin)
            .zip(y.par_chunks(CHUNK * nout))
            .map(|(xc, yc)| self.chunk_gradients(xc, yc, xc.len() / nin, batch, loss))
            .collect();
        let mut total = Gradients::zeros_like(self);
        let mut loss_sum = 0.0;
        for (l, g) in &parts {
            loss_sum += l;
            total.add(g);
        }
        Ok((loss.scale * loss_sum / batch as f64, total))
    }

    /// Visits every trainable parameter with its gradient.
    pub(crate) fn params_with_grads<'a>(
        &'a mut self,
        grads: &'a Gradients,
    ) -> impl Iterator<Item = (&'a mut f64, f64)> + 'a {
        self.layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.bias))
            .flat_map(|(layer, (gw, gb))| {
                layer
                    .weights
                    .iter_mut()
                    .zip(gw.iter().copied())
                    .chain(layer.bias.iter_mut().zip(gb.iter().copied()))
            })
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NetworkModel {
        NetworkModel::new(
            vec![4],
            vec![
                LayerSpec::dense(5, Activation::Relu),
                LayerSpec::dense(4, Activation::Linear),
            ],
        )
        .unwrap()
        .with_init(1)
    }

    #[test]
    fn zero_gradient_at_exact_fit() {
        let m = tiny();
        let x = [0.1, -0.2, 0.3, 0.4, 1.0, 0.5, -0.5, 0.0];
        let y = m.forward(&x, 2).unwrap();
        let (l, g) = m.gradients(&x, &y, 2, &Loss::nmse()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gradients_scale_with_loss() {
        let m = tiny();
        let x = [0.1, -0.2, 0.3, 0.4, 1.0, 0.5, -0.5, 0.0];
        let y = [1.0, 0.0, 2.0, -1.0, 0.5, 0.5, 0.5, 0.5];
        let (l1, g1) = m.gradients(&x, &y, 2, &Loss::nmse()).unwrap();
        let doubled = Loss {
            scale: 2.0,
            ..Loss::nmse()
        };
        let (l2, g2) = m.gradients(&x, &y, 2, &doubled).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-15);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((b - 2.0 * a).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn batch_shape_errors() {
        let m = tiny();
        assert!(m.forward(&[1.0; 3], 1).is_err());
        assert!(m.gradients(&[1.0; 4], &[1.0; 3], 1, &Loss::nmse()).is_err());
        assert!(m.gradients(&[], &[], 0, &Loss::nmse()).is_err());
    }

    #[test]
    fn chunked_evaluation_matches_single_pass() {
        let m = tiny();
        let batch = 3 * CHUNK + 5;
        let x: Vec<f64> = (0..batch * 4).map(|i| ((i * 37) % 11) as f64 / 11.0 - 0.5).collect();
        let chunked = m.forward(&x, batch).unwrap();
        let serial = m.forward_serial(&x, batch);
        for (a, b) in chunked.iter().zip(&serial) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
