//! Integer forward passes: conv, pool, concat, dense and whole-graph inference.
//!
//! All arithmetic is exact: bytes are widened to i32, accumulated, passed
//! through ReLU in the accumulator domain where the layer has one, then
//! rescaled back to bytes with one deterministic f64 multiply-round. Identical
//! inputs and weights yield bit-identical outputs on every platform.

use crate::error::{Error, Result};
use crate::nn::{LayerSpec, ModelGraph, PortRef};
use crate::quant::{requantize_value, QuantParams, QuantizedTensor};

fn seq_dims(t: &QuantizedTensor, what: &str) -> Result<(usize, usize)> {
    match t.shape.as_slice() {
        [len, channels] => Ok((*len, *channels)),
        other => Err(Error::ShapeMismatch(format!(
            "{what} needs a [len, channels] tensor, got {other:?}"
        ))),
    }
}

/// Same-padded integer 1-D convolution with fused ReLU.
///
/// `input` is `[len, in_channels]`, `weights` is `[filters, kernel, in_channels]`,
/// `bias` is one int32 per filter in the accumulator domain. Output length is
/// `ceil(len / stride)`. Padding positions contribute nothing (they hold the
/// input zero point, i.e. real zero).
pub fn conv1d_forward(
    input: &QuantizedTensor,
    stride: usize,
    weights: &QuantizedTensor,
    bias: &[i32],
    out_qparams: QuantParams,
) -> Result<QuantizedTensor> {
    let (len, in_ch) = seq_dims(input, "conv1d input")?;
    let (filters, kernel, w_ch) = match weights.shape.as_slice() {
        [f, k, c] => (*f, *k, *c),
        other => {
            return Err(Error::ShapeMismatch(format!(
                "conv1d weights need [filters, kernel, in_channels], got {other:?}"
            )))
        }
    };
    if w_ch != in_ch {
        return Err(Error::ShapeMismatch(format!(
            "conv1d input has {in_ch} channels but weights expect {w_ch}"
        )));
    }
    if bias.len() != filters {
        return Err(Error::ShapeMismatch(format!(
            "conv1d bias length {} does not match {filters} filters",
            bias.len()
        )));
    }
    if stride == 0 {
        return Err(Error::ShapeMismatch("conv1d stride must be >= 1".into()));
    }

    let out_len = len.div_ceil(stride);
    let pad_total = ((out_len - 1) * stride + kernel).saturating_sub(len);
    let pad_left = pad_total / 2;
    let z_in = i32::from(input.qparams.zero_point);
    let z_w = i32::from(weights.qparams.zero_point);
    let effective_scale = input.qparams.scale * weights.qparams.scale / out_qparams.scale;

    let mut out = vec![0u8; out_len * filters];
    for t in 0..out_len {
        let base = (t * stride) as isize - pad_left as isize;
        for f in 0..filters {
            let mut acc = bias[f];
            for k in 0..kernel {
                let idx = base + k as isize;
                if idx < 0 || idx >= len as isize {
                    continue;
                }
                let in_row = idx as usize * in_ch;
                let w_row = (f * kernel + k) * in_ch;
                for c in 0..in_ch {
                    acc += (i32::from(input.data[in_row + c]) - z_in)
                        * (i32::from(weights.data[w_row + c]) - z_w);
                }
            }
            let acc = acc.max(0); // ReLU in the accumulator domain
            out[t * filters + f] = requantize_value(acc, effective_scale, out_qparams.zero_point);
        }
    }
    QuantizedTensor::new(vec![out_len, filters], out, out_qparams)
}

/// Max-pool on bytes. Monotone under affine dequantization, so pooling in the
/// byte domain equals pooling real values; qparams pass through unchanged.
pub fn maxpool_forward(
    input: &QuantizedTensor,
    pool_size: usize,
    stride: usize,
) -> Result<QuantizedTensor> {
    let (len, channels) = seq_dims(input, "max_pooling1d input")?;
    if pool_size == 0 || stride == 0 || len < pool_size {
        return Err(Error::ShapeMismatch(format!(
            "max_pooling1d(pool {pool_size}, stride {stride}) cannot consume length {len}"
        )));
    }
    let out_len = (len - pool_size) / stride + 1;
    let mut out = vec![0u8; out_len * channels];
    for t in 0..out_len {
        for c in 0..channels {
            let mut best = 0u8;
            for k in 0..pool_size {
                best = best.max(input.data[(t * stride + k) * channels + c]);
            }
            out[t * channels + c] = best;
        }
    }
    QuantizedTensor::new(vec![out_len, channels], out, input.qparams)
}

/// Flatten each input timestep-major and join them. All inputs must already
/// share the output quantization; concat never rescales.
pub fn concat_forward(
    inputs: &[&QuantizedTensor],
    out_qparams: QuantParams,
) -> Result<QuantizedTensor> {
    if inputs.is_empty() {
        return Err(Error::ShapeMismatch(
            "concat needs at least one input".into(),
        ));
    }
    for (i, t) in inputs.iter().enumerate() {
        if t.qparams != out_qparams {
            return Err(Error::ShapeMismatch(format!(
                "concat input {i} has qparams {:?} but the output expects {:?}",
                t.qparams, out_qparams
            )));
        }
    }
    let total: usize = inputs.iter().map(|t| t.data.len()).sum();
    let mut data = Vec::with_capacity(total);
    for t in inputs {
        data.extend_from_slice(&t.data);
    }
    QuantizedTensor::new(vec![total], data, out_qparams)
}

/// Fully connected layer emitting the raw bias-add output (no activation).
/// The input is flattened regardless of its shape.
pub fn dense_forward(
    input: &QuantizedTensor,
    weights: &QuantizedTensor,
    bias: &[i32],
    out_qparams: QuantParams,
) -> Result<QuantizedTensor> {
    let in_features = input.data.len();
    let (units, w_in) = match weights.shape.as_slice() {
        [u, i] => (*u, *i),
        other => {
            return Err(Error::ShapeMismatch(format!(
                "dense weights need [units, in_features], got {other:?}"
            )))
        }
    };
    if w_in != in_features {
        return Err(Error::ShapeMismatch(format!(
            "dense input has {in_features} features but weights expect {w_in}"
        )));
    }
    if bias.len() != units {
        return Err(Error::ShapeMismatch(format!(
            "dense bias length {} does not match {units} units",
            bias.len()
        )));
    }
    let z_in = i32::from(input.qparams.zero_point);
    let z_w = i32::from(weights.qparams.zero_point);
    let effective_scale = input.qparams.scale * weights.qparams.scale / out_qparams.scale;
    let mut out = vec![0u8; units];
    for (u, (slot, &b)) in out.iter_mut().zip(bias).enumerate() {
        let mut acc = b;
        let w_row = u * in_features;
        for i in 0..in_features {
            acc += (i32::from(input.data[i]) - z_in) * (i32::from(weights.data[w_row + i]) - z_w);
        }
        *slot = requantize_value(acc, effective_scale, out_qparams.zero_point);
    }
    QuantizedTensor::new(vec![units], out, out_qparams)
}

/// Index of the largest element; ties break to the lowest index.
pub fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Result of one whole-graph forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    /// The output layer's quantized values.
    pub logits: Vec<u8>,
    /// Argmax class index, lowest index on ties.
    pub class_index: usize,
}

/// Run a graph over quantized inputs.
///
/// Input arity, shapes and quantization parameters are checked before any
/// compute runs; mismatches are rejected, never panics.
pub fn infer(graph: &ModelGraph, inputs: &[QuantizedTensor]) -> Result<Inference> {
    let shapes = graph.validate()?;
    if inputs.len() != graph.topology.inputs.len() {
        return Err(Error::InferenceRejected(format!(
            "graph takes {} inputs, got {}",
            graph.topology.inputs.len(),
            inputs.len()
        )));
    }
    for (i, (input, spec)) in inputs.iter().zip(&graph.topology.inputs).enumerate() {
        if input.shape != spec.shape.dims() {
            return Err(Error::InferenceRejected(format!(
                "input {i} ({}) has shape {:?}, expected {:?}",
                spec.name,
                input.shape,
                spec.shape.dims()
            )));
        }
        if input.qparams != graph.input_qparams[i] {
            return Err(Error::InferenceRejected(format!(
                "input {i} ({}) has qparams {:?}, expected {:?}",
                spec.name, input.qparams, graph.input_qparams[i]
            )));
        }
    }

    let mut outputs: Vec<Option<QuantizedTensor>> = vec![None; graph.topology.layers.len()];
    for (i, node) in graph.topology.layers.iter().enumerate() {
        let fetch = |port: PortRef| -> &QuantizedTensor {
            match port {
                PortRef::Input(j) => &inputs[j],
                PortRef::Layer(j) => outputs[j].as_ref().expect("topological order"),
            }
        };
        let out_qp = graph.output_qparams[i];
        let result = match node.spec {
            LayerSpec::Conv1d { stride, .. } => {
                let params = &graph.params[i];
                conv1d_forward(
                    fetch(node.inputs[0]),
                    stride,
                    params.weights.as_ref().unwrap(),
                    params.bias.as_ref().unwrap(),
                    out_qp,
                )?
            }
            LayerSpec::MaxPool1d { pool_size, stride } => {
                maxpool_forward(fetch(node.inputs[0]), pool_size, stride)?
            }
            LayerSpec::Concat => {
                let gathered: Vec<&QuantizedTensor> =
                    node.inputs.iter().map(|&p| fetch(p)).collect();
                concat_forward(&gathered, out_qp)?
            }
            LayerSpec::Dense { .. } => {
                let params = &graph.params[i];
                dense_forward(
                    fetch(node.inputs[0]),
                    params.weights.as_ref().unwrap(),
                    params.bias.as_ref().unwrap(),
                    out_qp,
                )?
            }
        };
        debug_assert_eq!(result.shape, shapes[i].dims());
        outputs[i] = Some(result);
    }

    let logits = outputs[graph.topology.output_layer()]
        .take()
        .expect("output layer evaluated")
        .data;
    let class_index = argmax_lowest(&logits);
    Ok(Inference {
        logits,
        class_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityLabel;
    use crate::nn::{build_big, build_little};
    use crate::quant::quantize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qp(scale: f64, zp: u8) -> QuantParams {
        QuantParams {
            scale,
            zero_point: zp,
        }
    }

    #[test]
    fn zero_weights_yield_constant_bias_output() {
        // all-zero weights, bias b: every output dequantizes to max(b_real, 0)
        let input = QuantizedTensor::new(vec![8, 1], vec![200; 8], qp(1.0, 128)).unwrap();
        let weights = QuantizedTensor::zeros(vec![2, 3, 1], qp(0.5, 0));
        // bias in accumulator domain: scale = 1.0 * 0.5 = 0.5, so 14 ~ real 7
        let bias = vec![14, -8];
        let out = conv1d_forward(&input, 1, &weights, &bias, qp(0.5, 0)).unwrap();
        // es = 1*0.5/0.5 = 1; filter 0: acc 14 -> byte 14 -> real 7
        // filter 1: acc -8 -> relu 0 -> byte 0 -> real 0
        for t in 0..8 {
            assert_eq!(out.data[t * 2], 14);
            assert_eq!(out.data[t * 2 + 1], 0);
        }
        assert_eq!(out.qparams.dequantize_value(out.data[0]), 7.0);
    }

    #[test]
    fn single_center_tap_identity_passes_input_through() {
        // Non-negative input domain (zero point 0) so ReLU is transparent.
        let data: Vec<u8> = vec![3, 0, 250, 17, 99, 1, 128, 77];
        let input = QuantizedTensor::new(vec![8, 1], data.clone(), qp(1.0, 0)).unwrap();
        // kernel [0, 1, 0] under scale 1 zero 0
        let weights = QuantizedTensor::new(vec![1, 3, 1], vec![0, 1, 0], qp(1.0, 0)).unwrap();
        let out = conv1d_forward(&input, 1, &weights, &[0], qp(1.0, 0)).unwrap();
        assert_eq!(out.data, data);
    }

    #[test]
    fn conv_tracks_float_reference_within_tolerance() {
        // random 8-length input vs an independently written float convolution
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..50 {
            let in_qp = qp(1.0, 128);
            let w_qp = qp(0.02, 120);
            let out_qp = qp(0.75, 10);
            let input_real: Vec<f64> = (0..16).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let weights_real: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.5)).collect();
            let bias_real: Vec<f64> = (0..2).map(|_| rng.gen_range(-20.0..20.0)).collect();

            let input = quantize(&input_real, &[8, 2], in_qp).unwrap();
            let weights = quantize(&weights_real, &[2, 3, 2], w_qp).unwrap();
            let bias: Vec<i32> = bias_real
                .iter()
                .map(|b| (b / (in_qp.scale * w_qp.scale)).round() as i32)
                .collect();
            let out = conv1d_forward(&input, 1, &weights, &bias, out_qp).unwrap();

            // float oracle over the *quantized* operand values
            let in_deq: Vec<f64> = input
                .data
                .iter()
                .map(|&q| in_qp.dequantize_value(q))
                .collect();
            let w_deq: Vec<f64> = weights
                .data
                .iter()
                .map(|&q| w_qp.dequantize_value(q))
                .collect();
            for t in 0..8usize {
                for f in 0..2usize {
                    let mut acc = f64::from(bias[f]) * in_qp.scale * w_qp.scale;
                    for k in 0..3usize {
                        let idx = t as isize + k as isize - 1;
                        if !(0..8).contains(&idx) {
                            continue;
                        }
                        for c in 0..2usize {
                            acc += in_deq[idx as usize * 2 + c] * w_deq[(f * 3 + k) * 2 + c];
                        }
                    }
                    let reference = acc
                        .max(0.0)
                        .clamp(out_qp.dequantize_value(0), out_qp.dequantize_value(255));
                    let got = out_qp.dequantize_value(out.data[t * 2 + f]);
                    assert!(
                        (got - reference).abs() <= 1.5 * out_qp.scale,
                        "trial {trial} t={t} f={f}: got {got}, reference {reference}"
                    );
                }
            }
        }
    }

    #[test]
    fn conv_shape_mismatch_is_rejected() {
        let input = QuantizedTensor::zeros(vec![8, 2], qp(1.0, 0));
        let weights = QuantizedTensor::zeros(vec![2, 3, 3], qp(1.0, 0)); // wants 3 channels
        let err = conv1d_forward(&input, 1, &weights, &[0, 0], qp(1.0, 0)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn maxpool_halves_and_keeps_qparams() {
        let input =
            QuantizedTensor::new(vec![4, 2], vec![1, 10, 5, 2, 9, 9, 3, 200], qp(0.5, 7)).unwrap();
        let out = maxpool_forward(&input, 2, 2).unwrap();
        assert_eq!(out.shape, vec![2, 2]);
        assert_eq!(out.data, vec![5, 10, 9, 200]);
        assert_eq!(out.qparams, qp(0.5, 7));
    }

    #[test]
    fn concat_requires_matching_qparams() {
        let a = QuantizedTensor::zeros(vec![2, 2], qp(1.0, 0));
        let b = QuantizedTensor::zeros(vec![3], qp(0.5, 0));
        assert!(concat_forward(&[&a, &b], qp(1.0, 0)).is_err());
        let b = QuantizedTensor::new(vec![3], vec![7, 8, 9], qp(1.0, 0)).unwrap();
        let joined = concat_forward(&[&a, &b], qp(1.0, 0)).unwrap();
        assert_eq!(joined.shape, vec![7]);
        assert_eq!(joined.data[4..], [7, 8, 9]);
    }

    #[test]
    fn dense_bias_dominates_when_weights_are_zero() {
        // Dense weights zero, biases (5,1,0,0,0,0) in real domain -> class 0
        let mut graph = build_big();
        let out_layer = graph.topology.output_layer();
        // real bias b maps to accumulator b / (in_scale * w_scale) = b / 1
        graph.params[out_layer].bias = Some(vec![5, 1, 0, 0, 0, 0]);
        let inputs: Vec<QuantizedTensor> = (0..3)
            .map(|_| QuantizedTensor::zeros(vec![128, 3], QuantParams::input()))
            .collect();
        let result = infer(&graph, &inputs).unwrap();
        assert_eq!(result.class_index, 0);
        assert_eq!(result.logits[0], 5);
    }

    #[test]
    fn equal_biases_tie_break_to_lowest_class() {
        let mut graph = build_little(ActivityLabel::Walking);
        let out_layer = graph.topology.output_layer();
        graph.params[out_layer].bias = Some(vec![3, 3]);
        let input = QuantizedTensor::zeros(vec![128, 3], QuantParams::input());
        let result = infer(&graph, &[input]).unwrap();
        assert_eq!(result.class_index, 0);
    }

    #[test]
    fn wrong_arity_rejected_before_compute() {
        let graph = build_big();
        let input = QuantizedTensor::zeros(vec![128, 3], QuantParams::input());
        let err = infer(&graph, &[input]).unwrap_err();
        assert!(matches!(err, Error::InferenceRejected(_)));
    }

    #[test]
    fn wrong_input_qparams_rejected() {
        let graph = build_little(ActivityLabel::Walking);
        let input = QuantizedTensor::zeros(vec![128, 3], qp(2.0, 128));
        assert!(matches!(
            infer(&graph, &[input]).unwrap_err(),
            Error::InferenceRejected(_)
        ));
    }

    #[test]
    fn inference_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut graph = build_little(ActivityLabel::Walking);
        for p in graph.params.iter_mut() {
            if let Some(w) = p.weights.as_mut() {
                rng.fill(w.data.as_mut_slice());
            }
            if let Some(b) = p.bias.as_mut() {
                for v in b.iter_mut() {
                    *v = rng.gen_range(-500..500);
                }
            }
        }
        let mut data = vec![0u8; 128 * 3];
        rng.fill(data.as_mut_slice());
        let input = QuantizedTensor::new(vec![128, 3], data, QuantParams::input()).unwrap();
        let a = infer(&graph, std::slice::from_ref(&input)).unwrap();
        let b = infer(&graph, &[input]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argmax_invariant_under_positive_rescaling() {
        let v = [3i32, 17, 17, 2, 5];
        let scaled: Vec<i32> = v.iter().map(|x| x * 7).collect();
        assert_eq!(argmax_lowest(&v), argmax_lowest(&scaled));
        assert_eq!(argmax_lowest(&v), 1);
    }
}
