//! JSON model manifest: one document holding layer specs, connectivity,
//! per-edge quantization parameters and weights.
//!
//! UINT8 weight buffers are hex strings; int32 biases are decimal arrays.
//! The document is versioned through its `schema` field.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ActivityLabel;
use crate::error::{Error, Result};
use crate::nn::{
    InputSpec, LayerNode, LayerParams, LayerSpec, ModelGraph, ModelKind, PortRef, TensorShape,
    Topology,
};
use crate::quant::{QuantParams, QuantizedTensor};

pub const MODEL_SCHEMA: &str = "biglittle-model/1";

/// Weight tensors carry asymmetric per-tensor parameters; manifests record
/// the convention so downstream consumers need not guess.
pub const WEIGHT_QUANTIZATION: &str = "asymmetric-per-tensor";

#[derive(Debug, Serialize, Deserialize)]
struct ManifestDoc {
    schema: String,
    kind: ManifestKind,
    /// Recorded quantization convention for weight tensors.
    #[serde(default = "default_weight_quantization")]
    weight_quantization: String,
    inputs: Vec<ManifestInput>,
    layers: Vec<ManifestLayer>,
}

fn default_weight_quantization() -> String {
    WEIGHT_QUANTIZATION.to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ManifestKind {
    Big,
    Little { target: u8 },
    Dual,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestInput {
    name: String,
    shape: Vec<usize>,
    scale: f64,
    zero_point: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLayer {
    name: String,
    #[serde(flatten)]
    kind: ManifestLayerKind,
    /// Ports as `"input:0"` / `"layer:3"` strings.
    inputs: Vec<String>,
    output_scale: f64,
    output_zero_point: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<ManifestWeights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<i32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifestLayerKind {
    Conv1d {
        filters: usize,
        kernel_size: usize,
        stride: usize,
    },
    MaxPool1d {
        pool_size: usize,
        stride: usize,
    },
    Concat {},
    Dense {
        units: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestWeights {
    shape: Vec<usize>,
    scale: f64,
    zero_point: u8,
    data_hex: String,
    #[serde(default)]
    degenerate_scale: bool,
}

fn port_to_string(port: PortRef) -> String {
    match port {
        PortRef::Input(i) => format!("input:{i}"),
        PortRef::Layer(i) => format!("layer:{i}"),
    }
}

fn port_from_string(s: &str) -> Result<PortRef> {
    let (kind, index) = s
        .split_once(':')
        .ok_or_else(|| Error::Manifest(format!("bad port reference {s:?}")))?;
    let index: usize = index
        .parse()
        .map_err(|_| Error::Manifest(format!("bad port index in {s:?}")))?;
    match kind {
        "input" => Ok(PortRef::Input(index)),
        "layer" => Ok(PortRef::Layer(index)),
        _ => Err(Error::Manifest(format!("bad port kind in {s:?}"))),
    }
}

fn shape_from_dims(dims: &[usize]) -> Result<TensorShape> {
    match dims {
        [len, channels] => Ok(TensorShape::seq(*len, *channels)),
        [features] => Ok(TensorShape::flat(*features)),
        other => Err(Error::Manifest(format!(
            "unsupported tensor rank {other:?}"
        ))),
    }
}

/// Serialize a graph to the manifest JSON text.
pub fn to_json(graph: &ModelGraph) -> Result<String> {
    graph.validate()?;
    let kind = match graph.kind {
        ModelKind::Big => ManifestKind::Big,
        ModelKind::Little(k) => ManifestKind::Little { target: k.code() },
        ModelKind::Dual => ManifestKind::Dual,
    };
    let inputs = graph
        .topology
        .inputs
        .iter()
        .zip(&graph.input_qparams)
        .map(|(spec, qp)| ManifestInput {
            name: spec.name.clone(),
            shape: spec.shape.dims(),
            scale: qp.scale,
            zero_point: qp.zero_point,
        })
        .collect();
    let layers = graph
        .topology
        .layers
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let kind = match node.spec {
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    stride,
                } => ManifestLayerKind::Conv1d {
                    filters,
                    kernel_size,
                    stride,
                },
                LayerSpec::MaxPool1d { pool_size, stride } => {
                    ManifestLayerKind::MaxPool1d { pool_size, stride }
                }
                LayerSpec::Concat => ManifestLayerKind::Concat {},
                LayerSpec::Dense { units } => ManifestLayerKind::Dense { units },
            };
            let params = &graph.params[i];
            let out_qp = graph.output_qparams[i];
            ManifestLayer {
                name: node.name.clone(),
                kind,
                inputs: node.inputs.iter().copied().map(port_to_string).collect(),
                output_scale: out_qp.scale,
                output_zero_point: out_qp.zero_point,
                weights: params.weights.as_ref().map(|w| ManifestWeights {
                    shape: w.shape.clone(),
                    scale: w.qparams.scale,
                    zero_point: w.qparams.zero_point,
                    data_hex: hex::encode(&w.data),
                    degenerate_scale: params.degenerate_scale,
                }),
                bias: params.bias.clone(),
            }
        })
        .collect();
    let doc = ManifestDoc {
        schema: MODEL_SCHEMA.to_string(),
        kind,
        weight_quantization: WEIGHT_QUANTIZATION.to_string(),
        inputs,
        layers,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parse a manifest JSON text back into a validated graph.
pub fn from_json(text: &str) -> Result<ModelGraph> {
    let doc: ManifestDoc = serde_json::from_str(text)?;
    if doc.schema != MODEL_SCHEMA {
        return Err(Error::Manifest(format!(
            "unsupported schema {:?}, expected {MODEL_SCHEMA:?}",
            doc.schema
        )));
    }
    if doc.weight_quantization != WEIGHT_QUANTIZATION {
        return Err(Error::Manifest(format!(
            "unsupported weight quantization {:?}, expected {WEIGHT_QUANTIZATION:?}",
            doc.weight_quantization
        )));
    }
    let kind = match doc.kind {
        ManifestKind::Big => ModelKind::Big,
        ManifestKind::Little { target } => ModelKind::Little(
            ActivityLabel::from_code(target)
                .map_err(|_| Error::Manifest(format!("little target {target} outside 1..=6")))?,
        ),
        ManifestKind::Dual => ModelKind::Dual,
    };

    let mut inputs = Vec::with_capacity(doc.inputs.len());
    let mut input_qparams = Vec::with_capacity(doc.inputs.len());
    for input in &doc.inputs {
        inputs.push(InputSpec {
            name: input.name.clone(),
            shape: shape_from_dims(&input.shape)?,
        });
        input_qparams.push(
            QuantParams::new(input.scale, input.zero_point)
                .map_err(|e| Error::Manifest(format!("input {}: {e}", input.name)))?,
        );
    }

    let mut layers = Vec::with_capacity(doc.layers.len());
    let mut params = Vec::with_capacity(doc.layers.len());
    let mut output_qparams = Vec::with_capacity(doc.layers.len());
    for layer in &doc.layers {
        let spec = match layer.kind {
            ManifestLayerKind::Conv1d {
                filters,
                kernel_size,
                stride,
            } => LayerSpec::Conv1d {
                filters,
                kernel_size,
                stride,
            },
            ManifestLayerKind::MaxPool1d { pool_size, stride } => {
                LayerSpec::MaxPool1d { pool_size, stride }
            }
            ManifestLayerKind::Concat {} => LayerSpec::Concat,
            ManifestLayerKind::Dense { units } => LayerSpec::Dense { units },
        };
        let ports = layer
            .inputs
            .iter()
            .map(|s| port_from_string(s))
            .collect::<Result<Vec<_>>>()?;
        layers.push(LayerNode {
            name: layer.name.clone(),
            spec,
            inputs: ports,
        });
        output_qparams.push(
            QuantParams::new(layer.output_scale, layer.output_zero_point)
                .map_err(|e| Error::Manifest(format!("layer {}: {e}", layer.name)))?,
        );
        let weights = match &layer.weights {
            Some(w) => {
                let data = hex::decode(&w.data_hex)
                    .map_err(|e| Error::Manifest(format!("layer {}: bad hex: {e}", layer.name)))?;
                let qp = QuantParams::new(w.scale, w.zero_point)
                    .map_err(|e| Error::Manifest(format!("layer {} weights: {e}", layer.name)))?;
                Some(
                    QuantizedTensor::new(w.shape.clone(), data, qp).map_err(|e| {
                        Error::Manifest(format!("layer {} weights: {e}", layer.name))
                    })?,
                )
            }
            None => None,
        };
        params.push(LayerParams {
            weights,
            bias: layer.bias.clone(),
            degenerate_scale: layer.weights.as_ref().is_some_and(|w| w.degenerate_scale),
        });
    }

    let graph = ModelGraph {
        kind,
        topology: Topology { inputs, layers },
        params,
        input_qparams,
        output_qparams,
    };
    graph
        .validate()
        .map_err(|e| Error::Manifest(format!("manifest graph invalid: {e}")))?;
    Ok(graph)
}

/// Write a manifest file.
pub fn save(graph: &ModelGraph, path: &Path) -> Result<()> {
    fs::write(path, to_json(graph)?)?;
    Ok(())
}

/// Load a manifest file; a missing path is a missing-artifact error.
pub fn load(path: &Path) -> Result<ModelGraph> {
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    from_json(&fs::read_to_string(path)?)
}
