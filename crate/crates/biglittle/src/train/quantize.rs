//! Post-training quantization of a float model into a runtime graph.
//!
//! Inputs are fixed at {scale 1, zero 128} (the [-128, 127] convention) and
//! every intermediate activation at the default [0, 255] mapping
//! {scale 1, zero 0} — no range calibration happens. Weights get asymmetric
//! per-tensor parameters from their min/max; biases are stored as int32 in the
//! accumulator domain (`in_scale * weight_scale`).

use crate::error::{Error, Result};
use crate::nn::{LayerParams, ModelGraph, PortRef};
use crate::quant::{quantize, QuantParams};
use crate::train::FloatModel;

/// Quantize a trained float model.
///
/// `calibration` inputs are only validated against the expected [-128, 127]
/// input domain (activation ranges are fixed by convention, so no statistics
/// are gathered); pass an empty slice to skip the check. Constant weight
/// tensors get the scale floor and are flagged in the resulting graph.
pub fn post_training_quantize(
    model: &FloatModel,
    calibration: &[Vec<Vec<f64>>],
) -> Result<ModelGraph> {
    for (i, sample) in calibration.iter().enumerate() {
        for buffer in sample {
            for &x in buffer {
                if !x.is_finite() || !(-128.0..=127.0).contains(&x) {
                    return Err(Error::Training(format!(
                        "calibration sample {i} has value {x} outside the rescaled [-128, 127] domain"
                    )));
                }
            }
        }
    }

    let shapes = model.topology.validate()?;
    let input_qparams = vec![QuantParams::input(); model.topology.inputs.len()];
    let output_qparams = vec![QuantParams::activation(); model.topology.layers.len()];

    let mut params = Vec::with_capacity(model.topology.layers.len());
    for (i, node) in model.topology.layers.iter().enumerate() {
        let input_shapes = model.topology.layer_input_shapes(i, &shapes);
        let Some(weight_dims) = node.spec.weight_dims(&input_shapes) else {
            params.push(LayerParams::none());
            continue;
        };
        let float_layer = &model.layers[i];
        let wmin = float_layer.w.iter().cloned().fold(f64::INFINITY, f64::min);
        let wmax = float_layer
            .w
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let (weight_qp, degenerate) = QuantParams::from_range(wmin, wmax)?;
        let weights = quantize(&float_layer.w, &weight_dims, weight_qp)?;

        // Bias scale is the accumulator scale: input scale times weight scale.
        let in_scale = match node.inputs[0] {
            PortRef::Input(j) => input_qparams[j].scale,
            PortRef::Layer(j) => output_qparams[j].scale,
        };
        let bias_scale = in_scale * weight_qp.scale;
        let bias = float_layer
            .b
            .iter()
            .map(|&b| {
                (b / bias_scale)
                    .round()
                    .clamp(f64::from(i32::MIN), f64::from(i32::MAX)) as i32
            })
            .collect();

        params.push(LayerParams {
            weights: Some(weights),
            bias: Some(bias),
            degenerate_scale: degenerate,
        });
    }

    let graph = ModelGraph {
        kind: model.kind,
        topology: model.topology.clone(),
        params,
        input_qparams,
        output_qparams,
    };
    graph.validate()?;
    Ok(graph)
}
