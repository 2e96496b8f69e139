//! Integer inference engine for feed-forward 1-D CNN graphs.
//!
//! A [`ModelGraph`] couples a [`Topology`] with per-layer UINT8 weights,
//! int32 accumulator-domain biases and per-edge quantization parameters.
//! [`infer`] runs a graph over quantized inputs; the three model families are
//! built by [`build_big`], [`build_little`] and [`build_dual`].

pub mod engine;
pub mod manifest;
mod topology;

pub use engine::{
    argmax_lowest, concat_forward, conv1d_forward, dense_forward, infer, maxpool_forward, Inference,
};
pub use topology::{
    big_topology, dual_topology, little_topology, InputSpec, LayerNode, LayerRow, LayerSpec,
    PortRef, TensorShape, Topology, TopologyBuilder,
};

use crate::data::ActivityLabel;
use crate::error::{Error, Result};
use crate::quant::{QuantParams, QuantizedTensor};

/// Which of the three model families a graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Six-class classifier over all three sensors.
    Big,
    /// Binary "is it still this activity" classifier for one target class.
    Little(ActivityLabel),
    /// Binary change detector over a pair of adjacent windows.
    Dual,
}

impl ModelKind {
    pub fn num_classes(&self) -> usize {
        match self {
            ModelKind::Big => 6,
            _ => 2,
        }
    }

    pub fn topology(&self) -> Topology {
        match self {
            ModelKind::Big => big_topology(),
            ModelKind::Little(_) => little_topology(),
            ModelKind::Dual => dual_topology(),
        }
    }

    /// Stable file stem for artifacts: `big`, `little_4`, `dual`.
    pub fn file_stem(&self) -> String {
        match self {
            ModelKind::Big => "big".to_string(),
            ModelKind::Little(k) => format!("little_{}", k.code()),
            ModelKind::Dual => "dual".to_string(),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Big => write!(f, "big"),
            ModelKind::Little(k) => write!(f, "little({})", k.code()),
            ModelKind::Dual => write!(f, "dual"),
        }
    }
}

/// Weights attached to one layer. Pool and concat layers carry none.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Option<QuantizedTensor>,
    /// Bias in the int32 accumulator domain (scale = in_scale * weight_scale).
    pub bias: Option<Vec<i32>>,
    /// True when the weight tensor was constant and the scale floor applied.
    pub degenerate_scale: bool,
}

impl LayerParams {
    pub fn none() -> Self {
        Self {
            weights: None,
            bias: None,
            degenerate_scale: false,
        }
    }
}

/// An immutable quantized model: topology, weights and per-edge scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub kind: ModelKind,
    pub topology: Topology,
    /// Parallel to `topology.layers`.
    pub params: Vec<LayerParams>,
    /// Quantization of each graph input, parallel to `topology.inputs`.
    pub input_qparams: Vec<QuantParams>,
    /// Quantization of each layer's output, parallel to `topology.layers`.
    pub output_qparams: Vec<QuantParams>,
}

impl ModelGraph {
    /// Build a graph of the given kind with zeroed weights, the input
    /// convention {scale 1, zero 128} and default activation scaling.
    pub fn with_zero_weights(kind: ModelKind) -> Self {
        let topology = kind.topology();
        let shapes = topology
            .validate()
            .expect("constructor topologies are valid");
        let weight_qp = QuantParams {
            scale: 1.0,
            zero_point: 0,
        };
        let params = topology
            .layers
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let input_shapes = topology.layer_input_shapes(i, &shapes);
                match node.spec.weight_dims(&input_shapes) {
                    Some(dims) => LayerParams {
                        weights: Some(QuantizedTensor::zeros(dims, weight_qp)),
                        bias: Some(vec![0; node.spec.bias_len().unwrap()]),
                        degenerate_scale: false,
                    },
                    None => LayerParams::none(),
                }
            })
            .collect();
        let input_qparams = vec![QuantParams::input(); topology.inputs.len()];
        let output_qparams = vec![QuantParams::activation(); topology.layers.len()];
        ModelGraph {
            kind,
            topology,
            params,
            input_qparams,
            output_qparams,
        }
    }

    /// Check weights, biases and qparams against the topology.
    pub fn validate(&self) -> Result<Vec<TensorShape>> {
        let shapes = self.topology.validate()?;
        if self.params.len() != self.topology.layers.len() {
            return Err(Error::GraphConstruction(format!(
                "{} layers but {} parameter slots",
                self.topology.layers.len(),
                self.params.len()
            )));
        }
        if self.input_qparams.len() != self.topology.inputs.len() {
            return Err(Error::GraphConstruction(
                "input qparams do not cover every graph input".into(),
            ));
        }
        if self.output_qparams.len() != self.topology.layers.len() {
            return Err(Error::GraphConstruction(
                "output qparams do not cover every layer".into(),
            ));
        }
        for (i, (node, params)) in self.topology.layers.iter().zip(&self.params).enumerate() {
            let input_shapes = self.topology.layer_input_shapes(i, &shapes);
            match node.spec.weight_dims(&input_shapes) {
                Some(dims) => {
                    let w = params.weights.as_ref().ok_or_else(|| {
                        Error::GraphConstruction(format!("layer {} has no weights", node.name))
                    })?;
                    if w.shape != dims {
                        return Err(Error::GraphConstruction(format!(
                            "layer {} weight shape {:?} does not match expected {:?}",
                            node.name, w.shape, dims
                        )));
                    }
                    let bias = params.bias.as_ref().ok_or_else(|| {
                        Error::GraphConstruction(format!("layer {} has no bias", node.name))
                    })?;
                    if bias.len() != node.spec.bias_len().unwrap() {
                        return Err(Error::GraphConstruction(format!(
                            "layer {} bias length {} does not match {}",
                            node.name,
                            bias.len(),
                            node.spec.bias_len().unwrap()
                        )));
                    }
                }
                None => {
                    if params.weights.is_some() || params.bias.is_some() {
                        return Err(Error::GraphConstruction(format!(
                            "layer {} should not carry parameters",
                            node.name
                        )));
                    }
                }
            }
        }
        Ok(shapes)
    }

    /// Quantization parameters on the tensor feeding the given port.
    pub fn port_qparams(&self, port: PortRef) -> QuantParams {
        match port {
            PortRef::Input(i) => self.input_qparams[i],
            PortRef::Layer(i) => self.output_qparams[i],
        }
    }

    pub fn summary(&self) -> Result<Vec<LayerRow>> {
        self.topology.summary()
    }
}

/// Total parameter element count (weights plus biases) of a graph.
pub fn total_params(graph: &ModelGraph) -> usize {
    graph
        .params
        .iter()
        .map(|p| {
            p.weights.as_ref().map_or(0, QuantizedTensor::len) + p.bias.as_ref().map_or(0, Vec::len)
        })
        .sum()
}

/// Six-class model with zeroed weights. 9246 parameters.
pub fn build_big() -> ModelGraph {
    ModelGraph::with_zero_weights(ModelKind::Big)
}

/// Per-activity binary model with zeroed weights. 184 parameters.
pub fn build_little(target: ActivityLabel) -> ModelGraph {
    ModelGraph::with_zero_weights(ModelKind::Little(target))
}

/// Change-detector model with zeroed weights. 300 parameters.
pub fn build_dual() -> ModelGraph {
    ModelGraph::with_zero_weights(ModelKind::Dual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_match_published_totals() {
        assert_eq!(total_params(&build_big()), 9246);
        assert_eq!(total_params(&build_little(ActivityLabel::Sitting)), 184);
        assert_eq!(total_params(&build_dual()), 300);
    }

    #[test]
    fn constructor_totals_agree_with_topology() {
        for graph in [
            build_big(),
            build_little(ActivityLabel::Walking),
            build_dual(),
        ] {
            assert_eq!(total_params(&graph), graph.topology.total_params().unwrap());
            graph.validate().unwrap();
        }
    }

    #[test]
    fn validate_catches_wrong_weight_shape() {
        let mut graph = build_little(ActivityLabel::Walking);
        let w = graph.params[0].weights.as_mut().unwrap();
        w.shape = vec![4, 3, 2]; // wrong in_channels
        w.data.truncate(24);
        assert!(graph.validate().is_err());
    }
}
