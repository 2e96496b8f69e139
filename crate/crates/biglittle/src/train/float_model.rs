//! Float-domain counterpart of the integer runtime: identical topology and
//! memory layout, f64 weights, forward and backward passes written by hand.
//!
//! Layouts match the integer engine exactly: sequence tensors are
//! timestep-major, conv weights are `[filters][kernel][in_channels]`, dense
//! weights `[units][in_features]`. Hidden convolutions apply ReLU, the dense
//! output is a raw bias-add.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{LayerSpec, ModelKind, PortRef, TensorShape, Topology};

/// One layer's parameters (or gradients) — empty for pool/concat layers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatLayer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl FloatLayer {
    fn empty() -> Self {
        Self {
            w: Vec::new(),
            b: Vec::new(),
        }
    }
}

/// Gradient buffers shaped like the model's parameters.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<FloatLayer>,
}

impl GradientSet {
    pub fn zeros_like(model: &FloatModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| FloatLayer {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        self.add_scaled(other, 1.0);
    }

    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.w.iter_mut().zip(&b.w) {
                *x += scale * y;
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += scale * y;
            }
        }
    }
}

/// A trainable float model over one of the three fixed topologies.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatModel {
    pub kind: ModelKind,
    pub topology: Topology,
    pub layers: Vec<FloatLayer>,
    shapes: Vec<TensorShape>,
}

struct Tape {
    /// Output buffer per layer.
    outputs: Vec<Vec<f64>>,
    /// Absolute input index of each pooled maximum, per pool layer.
    pool_argmax: Vec<Vec<usize>>,
}

/// Assumed scale of the integer-domain model inputs. He scaling presumes
/// unit-variance inputs; rescaled windows live in [-128, 127], so layers fed
/// directly by a graph input shrink their initial weights by this factor to
/// keep initial activations O(1).
pub const INPUT_INIT_SCALE: f64 = 64.0;

impl FloatModel {
    /// He-style uniform initialization: weights from U(-limit, limit) with
    /// limit = sqrt(6 / fan_in), divided by [`INPUT_INIT_SCALE`] for layers
    /// reading a graph input; biases zero.
    pub fn init(kind: ModelKind, rng: &mut impl Rng) -> Self {
        let topology = kind.topology();
        let shapes = topology
            .validate()
            .expect("constructor topologies are valid");
        let layers = topology
            .layers
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let input_shapes = topology.layer_input_shapes(i, &shapes);
                match node.spec.weight_dims(&input_shapes) {
                    Some(dims) => {
                        let fan_in: usize = dims[1..].iter().product();
                        let reads_graph_input =
                            node.inputs.iter().any(|p| matches!(p, PortRef::Input(_)));
                        let mut limit = (6.0 / fan_in as f64).sqrt();
                        if reads_graph_input {
                            limit /= INPUT_INIT_SCALE;
                        }
                        let w = (0..dims.iter().product())
                            .map(|_| rng.gen_range(-limit..limit))
                            .collect();
                        FloatLayer {
                            w,
                            b: vec![0.0; node.spec.bias_len().unwrap()],
                        }
                    }
                    None => FloatLayer::empty(),
                }
            })
            .collect();
        Self {
            kind,
            topology,
            layers,
            shapes,
        }
    }

    /// Wrap existing parameters (used by tests building hand-made models).
    pub fn from_parts(
        kind: ModelKind,
        topology: Topology,
        layers: Vec<FloatLayer>,
    ) -> Result<Self> {
        let shapes = topology.validate()?;
        if layers.len() != topology.layers.len() {
            return Err(Error::GraphConstruction(
                "parameter count does not match layer count".into(),
            ));
        }
        Ok(Self {
            kind,
            topology,
            layers,
            shapes,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn output_shapes(&self) -> &[TensorShape] {
        &self.shapes
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<()> {
        if inputs.len() != self.topology.inputs.len() {
            return Err(Error::ShapeMismatch(format!(
                "model takes {} inputs, got {}",
                self.topology.inputs.len(),
                inputs.len()
            )));
        }
        for (i, (input, spec)) in inputs.iter().zip(&self.topology.inputs).enumerate() {
            if input.len() != spec.shape.elements() {
                return Err(Error::ShapeMismatch(format!(
                    "input {i} has {} elements, expected {}",
                    input.len(),
                    spec.shape.elements()
                )));
            }
        }
        Ok(())
    }

    fn forward_tape(&self, inputs: &[Vec<f64>]) -> Result<Tape> {
        self.check_inputs(inputs)?;
        let n = self.topology.layers.len();
        let mut tape = Tape {
            outputs: Vec::with_capacity(n),
            pool_argmax: vec![Vec::new(); n],
        };
        for (i, node) in self.topology.layers.iter().enumerate() {
            let fetch = |port: PortRef| -> &[f64] {
                match port {
                    PortRef::Input(j) => &inputs[j],
                    PortRef::Layer(j) => &tape.outputs[j],
                }
            };
            let out = match node.spec {
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    stride,
                } => {
                    let x = fetch(node.inputs[0]);
                    let (len, ch) = self.seq_input_dims(i);
                    conv_forward(
                        x,
                        len,
                        ch,
                        &self.layers[i].w,
                        &self.layers[i].b,
                        filters,
                        kernel_size,
                        stride,
                    )
                }
                LayerSpec::MaxPool1d { pool_size, stride } => {
                    let x = fetch(node.inputs[0]);
                    let (len, ch) = self.seq_input_dims(i);
                    let (y, argmax) = pool_forward(x, len, ch, pool_size, stride);
                    tape.pool_argmax[i] = argmax;
                    y
                }
                LayerSpec::Concat => {
                    let mut y = Vec::with_capacity(self.shapes[i].elements());
                    for &port in &node.inputs {
                        y.extend_from_slice(fetch(port));
                    }
                    y
                }
                LayerSpec::Dense { units } => {
                    let x = fetch(node.inputs[0]);
                    dense_forward(x, &self.layers[i].w, &self.layers[i].b, units)
                }
            };
            tape.outputs.push(out);
        }
        Ok(tape)
    }

    fn seq_input_dims(&self, layer: usize) -> (usize, usize) {
        let input_shapes = self.topology.layer_input_shapes(layer, &self.shapes);
        match input_shapes[0] {
            TensorShape::Seq { len, channels } => (len, channels),
            TensorShape::Flat { .. } => unreachable!("validated topology"),
        }
    }

    /// Raw logits for one sample.
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut tape = self.forward_tape(inputs)?;
        Ok(tape.outputs.pop().unwrap())
    }

    /// Softmax cross-entropy loss and parameter gradients for one sample.
    pub fn loss_and_grad(&self, inputs: &[Vec<f64>], target: usize) -> Result<(f64, GradientSet)> {
        let tape = self.forward_tape(inputs)?;
        let logits = tape.outputs.last().unwrap();
        if target >= logits.len() {
            return Err(Error::Training(format!(
                "target class {target} outside 0..{}",
                logits.len()
            )));
        }
        let (loss, dlogits) = softmax_cross_entropy(logits, target);

        let mut grads = GradientSet::zeros_like(self);
        // Gradient buffer per layer output; inputs need no gradients.
        let mut d_out: Vec<Vec<f64>> = tape.outputs.iter().map(|o| vec![0.0; o.len()]).collect();
        *d_out.last_mut().unwrap() = dlogits;

        for i in (0..self.topology.layers.len()).rev() {
            let node = &self.topology.layers[i];
            let dy = std::mem::take(&mut d_out[i]);
            // Split mutable access: gradients flow only to earlier layers.
            let (earlier, _) = d_out.split_at_mut(i);
            let mut route = |port: PortRef, contribution: &[f64]| {
                if let PortRef::Layer(j) = port {
                    for (acc, &v) in earlier[j].iter_mut().zip(contribution) {
                        *acc += v;
                    }
                }
            };
            let fetch = |port: PortRef| -> &[f64] {
                match port {
                    PortRef::Input(j) => &inputs[j],
                    PortRef::Layer(j) => &tape.outputs[j],
                }
            };
            match node.spec {
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    stride,
                } => {
                    let x = fetch(node.inputs[0]);
                    let y = &tape.outputs[i];
                    let (len, ch) = self.seq_input_dims(i);
                    let mut dx = vec![0.0; x.len()];
                    let layer_grads = &mut grads.layers[i];
                    conv_backward(
                        x,
                        y,
                        &dy,
                        len,
                        ch,
                        &self.layers[i].w,
                        filters,
                        kernel_size,
                        stride,
                        &mut layer_grads.w,
                        &mut layer_grads.b,
                        &mut dx,
                    );
                    route(node.inputs[0], &dx);
                }
                LayerSpec::MaxPool1d { .. } => {
                    let x_len = fetch(node.inputs[0]).len();
                    let mut dx = vec![0.0; x_len];
                    for (&src, &g) in tape.pool_argmax[i].iter().zip(&dy) {
                        dx[src] += g;
                    }
                    route(node.inputs[0], &dx);
                }
                LayerSpec::Concat => {
                    let mut offset = 0;
                    for &port in &node.inputs {
                        let n = fetch(port).len();
                        route(port, &dy[offset..offset + n]);
                        offset += n;
                    }
                }
                LayerSpec::Dense { units } => {
                    let x = fetch(node.inputs[0]);
                    let in_features = x.len();
                    let w = &self.layers[i].w;
                    let layer_grads = &mut grads.layers[i];
                    let gw = &mut layer_grads.w;
                    let gb = &mut layer_grads.b;
                    let mut dx = vec![0.0; in_features];
                    for u in 0..units {
                        let g = dy[u];
                        gb[u] += g;
                        let row = u * in_features;
                        for f in 0..in_features {
                            gw[row + f] += g * x[f];
                            dx[f] += g * w[row + f];
                        }
                    }
                    route(node.inputs[0], &dx);
                }
            }
        }
        Ok((loss, grads))
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    len: usize,
    ch: usize,
    w: &[f64],
    b: &[f64],
    filters: usize,
    kernel: usize,
    stride: usize,
) -> Vec<f64> {
    let out_len = len.div_ceil(stride);
    let pad_left = (((out_len - 1) * stride + kernel).saturating_sub(len)) / 2;
    let mut y = vec![0.0; out_len * filters];
    for t in 0..out_len {
        let base = (t * stride) as isize - pad_left as isize;
        for f in 0..filters {
            let mut acc = b[f];
            for k in 0..kernel {
                let idx = base + k as isize;
                if idx < 0 || idx >= len as isize {
                    continue;
                }
                let x_row = idx as usize * ch;
                let w_row = (f * kernel + k) * ch;
                for c in 0..ch {
                    acc += x[x_row + c] * w[w_row + c];
                }
            }
            y[t * filters + f] = acc.max(0.0); // ReLU
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    y: &[f64],
    dy: &[f64],
    len: usize,
    ch: usize,
    w: &[f64],
    filters: usize,
    kernel: usize,
    stride: usize,
    gw: &mut [f64],
    gb: &mut [f64],
    dx: &mut [f64],
) {
    let out_len = len.div_ceil(stride);
    let pad_left = (((out_len - 1) * stride + kernel).saturating_sub(len)) / 2;
    for t in 0..out_len {
        let base = (t * stride) as isize - pad_left as isize;
        for f in 0..filters {
            // ReLU gate: gradient flows only where the output was positive.
            if y[t * filters + f] <= 0.0 {
                continue;
            }
            let g = dy[t * filters + f];
            gb[f] += g;
            for k in 0..kernel {
                let idx = base + k as isize;
                if idx < 0 || idx >= len as isize {
                    continue;
                }
                let x_row = idx as usize * ch;
                let w_row = (f * kernel + k) * ch;
                for c in 0..ch {
                    gw[w_row + c] += g * x[x_row + c];
                    dx[x_row + c] += g * w[w_row + c];
                }
            }
        }
    }
}

fn pool_forward(
    x: &[f64],
    len: usize,
    ch: usize,
    pool: usize,
    stride: usize,
) -> (Vec<f64>, Vec<usize>) {
    let out_len = (len - pool) / stride + 1;
    let mut y = vec![0.0; out_len * ch];
    let mut argmax = vec![0usize; out_len * ch];
    for t in 0..out_len {
        for c in 0..ch {
            let mut best_idx = (t * stride) * ch + c;
            let mut best = x[best_idx];
            for k in 1..pool {
                let idx = (t * stride + k) * ch + c;
                if x[idx] > best {
                    best = x[idx];
                    best_idx = idx;
                }
            }
            y[t * ch + c] = best;
            argmax[t * ch + c] = best_idx;
        }
    }
    (y, argmax)
}

fn dense_forward(x: &[f64], w: &[f64], b: &[f64], units: usize) -> Vec<f64> {
    let in_features = x.len();
    let mut y = Vec::with_capacity(units);
    for (u, &bias) in b.iter().enumerate().take(units) {
        let row = u * in_features;
        let mut acc = bias;
        for f in 0..in_features {
            acc += x[f] * w[row + f];
        }
        y.push(acc);
    }
    y
}

/// Numerically stable softmax cross-entropy; returns the loss and dlogits.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let mut dlogits = Vec::with_capacity(logits.len());
    for (i, &e) in exps.iter().enumerate() {
        let p = e / sum;
        dlogits.push(if i == target { p - 1.0 } else { p });
    }
    let loss = -(exps[target] / sum).max(1e-300).ln();
    (loss, dlogits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityLabel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_matches_topology_param_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            FloatModel::init(ModelKind::Big, &mut rng).param_count(),
            9246
        );
        assert_eq!(
            FloatModel::init(ModelKind::Little(ActivityLabel::Walking), &mut rng).param_count(),
            184
        );
        assert_eq!(
            FloatModel::init(ModelKind::Dual, &mut rng).param_count(),
            300
        );
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = FloatModel::init(ModelKind::Dual, &mut ChaCha8Rng::seed_from_u64(5));
        let b = FloatModel::init(ModelKind::Dual, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn forward_shapes_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = FloatModel::init(ModelKind::Big, &mut rng);
        let inputs = vec![vec![0.5; 384]; 3];
        let logits = model.forward(&inputs).unwrap();
        assert_eq!(logits.len(), 6);
        let err = model.forward(&inputs[..2]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn softmax_loss_basics() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0], 0);
        assert!((loss - (2.0f64).ln()).abs() < 1e-12);
        assert!((grad[0] + 0.5).abs() < 1e-12);
        assert!((grad[1] - 0.5).abs() < 1e-12);
    }
}
