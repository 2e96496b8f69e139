//! Layer specs, shape algebra and the three model topologies.
//!
//! Tensors are either `Seq { len, channels }` (timestep-major 1-D feature
//! maps) or `Flat { features }` (vectors). Convolutions are same-padded with
//! a fused ReLU; max-pools halve the extent; `Concat` flattens its inputs and
//! joins them; `Dense` flattens its single input and emits the raw bias-add
//! output (no activation).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorShape {
    Seq { len: usize, channels: usize },
    Flat { features: usize },
}

impl TensorShape {
    pub fn seq(len: usize, channels: usize) -> Self {
        TensorShape::Seq { len, channels }
    }

    pub fn flat(features: usize) -> Self {
        TensorShape::Flat { features }
    }

    pub fn elements(&self) -> usize {
        match *self {
            TensorShape::Seq { len, channels } => len * channels,
            TensorShape::Flat { features } => features,
        }
    }

    /// Dimension list as stored in tensors and manifests.
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            TensorShape::Seq { len, channels } => vec![len, channels],
            TensorShape::Flat { features } => vec![features],
        }
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            TensorShape::Seq { len, channels } => write!(f, "(None, {len}, {channels})"),
            TensorShape::Flat { features } => write!(f, "(None, {features})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Same-padded 1-D convolution with fused ReLU.
    Conv1d {
        filters: usize,
        kernel_size: usize,
        stride: usize,
    },
    MaxPool1d {
        pool_size: usize,
        stride: usize,
    },
    /// Flatten every input and join them into one feature vector.
    Concat,
    /// Fully connected layer emitting raw bias-add output.
    Dense {
        units: usize,
    },
}

impl LayerSpec {
    pub fn conv(filters: usize) -> Self {
        LayerSpec::Conv1d {
            filters,
            kernel_size: 3,
            stride: 1,
        }
    }

    pub fn pool() -> Self {
        LayerSpec::MaxPool1d {
            pool_size: 2,
            stride: 2,
        }
    }

    /// Hidden activations are ReLU; pooling, concat and the dense output are not.
    pub fn has_relu(&self) -> bool {
        matches!(self, LayerSpec::Conv1d { .. })
    }

    pub fn output_shape(&self, inputs: &[TensorShape]) -> Result<TensorShape> {
        let one = |what: &str| -> Result<TensorShape> {
            if inputs.len() == 1 {
                Ok(inputs[0])
            } else {
                Err(Error::GraphConstruction(format!(
                    "{what} takes exactly one input, got {}",
                    inputs.len()
                )))
            }
        };
        match *self {
            LayerSpec::Conv1d {
                filters, stride, ..
            } => match one("conv1d")? {
                TensorShape::Seq { len, .. } => {
                    if stride == 0 {
                        return Err(Error::GraphConstruction(
                            "conv1d stride must be >= 1".into(),
                        ));
                    }
                    Ok(TensorShape::seq(len.div_ceil(stride), filters))
                }
                other => Err(Error::GraphConstruction(format!(
                    "conv1d needs a sequence input, got {other}"
                ))),
            },
            LayerSpec::MaxPool1d { pool_size, stride } => match one("max_pooling1d")? {
                TensorShape::Seq { len, channels } => {
                    if pool_size == 0 || stride == 0 || len < pool_size {
                        return Err(Error::GraphConstruction(format!(
                            "max_pooling1d(pool {pool_size}, stride {stride}) cannot consume length {len}"
                        )));
                    }
                    Ok(TensorShape::seq((len - pool_size) / stride + 1, channels))
                }
                other => Err(Error::GraphConstruction(format!(
                    "max_pooling1d needs a sequence input, got {other}"
                ))),
            },
            LayerSpec::Concat => {
                if inputs.is_empty() {
                    return Err(Error::GraphConstruction(
                        "concat needs at least one input".into(),
                    ));
                }
                Ok(TensorShape::flat(
                    inputs.iter().map(TensorShape::elements).sum(),
                ))
            }
            LayerSpec::Dense { units } => {
                let input = one("dense")?;
                if units == 0 {
                    return Err(Error::GraphConstruction(
                        "dense needs at least one unit".into(),
                    ));
                }
                let _ = input.elements();
                Ok(TensorShape::flat(units))
            }
        }
    }

    /// Trainable parameter count given the input shapes.
    pub fn param_count(&self, inputs: &[TensorShape]) -> Result<usize> {
        Ok(match *self {
            LayerSpec::Conv1d {
                filters,
                kernel_size,
                ..
            } => match inputs {
                [TensorShape::Seq { channels, .. }] => kernel_size * channels * filters + filters,
                _ => {
                    return Err(Error::GraphConstruction(
                        "conv1d needs one sequence input".into(),
                    ))
                }
            },
            LayerSpec::Dense { units } => match inputs {
                [input] => input.elements() * units + units,
                _ => return Err(Error::GraphConstruction("dense needs one input".into())),
            },
            LayerSpec::MaxPool1d { .. } | LayerSpec::Concat => 0,
        })
    }

    /// Weight tensor dims: conv `[filters, kernel, in_channels]`,
    /// dense `[units, in_features]`.
    pub fn weight_dims(&self, inputs: &[TensorShape]) -> Option<Vec<usize>> {
        match *self {
            LayerSpec::Conv1d {
                filters,
                kernel_size,
                ..
            } => match inputs {
                [TensorShape::Seq { channels, .. }] => Some(vec![filters, kernel_size, *channels]),
                _ => None,
            },
            LayerSpec::Dense { units } => match inputs {
                [input] => Some(vec![units, input.elements()]),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn bias_len(&self) -> Option<usize> {
        match *self {
            LayerSpec::Conv1d { filters, .. } => Some(filters),
            LayerSpec::Dense { units } => Some(units),
            _ => None,
        }
    }
}

/// Reference to a layer input: either a graph input or an earlier layer's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortRef {
    Input(usize),
    Layer(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNode {
    pub name: String,
    pub spec: LayerSpec,
    pub inputs: Vec<PortRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub name: String,
    pub shape: TensorShape,
}

/// An immutable feed-forward layer graph in topological order.
///
/// Acyclicity is structural: a layer may only reference graph inputs or
/// layers with a smaller index, which `validate` enforces.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub inputs: Vec<InputSpec>,
    pub layers: Vec<LayerNode>,
}

/// One row of a topology summary: layer name, output shape, parameter count.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRow {
    pub name: String,
    pub output_shape: TensorShape,
    pub params: usize,
}

impl Topology {
    /// Check ordering and shape consistency; return each layer's output shape.
    pub fn validate(&self) -> Result<Vec<TensorShape>> {
        if self.layers.is_empty() {
            return Err(Error::GraphConstruction("topology has no layers".into()));
        }
        let mut shapes: Vec<TensorShape> = Vec::with_capacity(self.layers.len());
        for (i, node) in self.layers.iter().enumerate() {
            let mut input_shapes = Vec::with_capacity(node.inputs.len());
            for port in &node.inputs {
                match *port {
                    PortRef::Input(j) => {
                        let spec = self.inputs.get(j).ok_or_else(|| {
                            Error::GraphConstruction(format!(
                                "layer {} references missing input {j}",
                                node.name
                            ))
                        })?;
                        input_shapes.push(spec.shape);
                    }
                    PortRef::Layer(j) => {
                        if j >= i {
                            return Err(Error::GraphConstruction(format!(
                                "layer {} references layer {j} which is not earlier in the graph",
                                node.name
                            )));
                        }
                        input_shapes.push(shapes[j]);
                    }
                }
            }
            shapes.push(node.spec.output_shape(&input_shapes)?);
        }
        Ok(shapes)
    }

    /// Input shapes feeding one layer. Assumes a validated topology.
    pub fn layer_input_shapes(&self, index: usize, shapes: &[TensorShape]) -> Vec<TensorShape> {
        self.layers[index]
            .inputs
            .iter()
            .map(|port| match *port {
                PortRef::Input(j) => self.inputs[j].shape,
                PortRef::Layer(j) => shapes[j],
            })
            .collect()
    }

    pub fn total_params(&self) -> Result<usize> {
        let shapes = self.validate()?;
        let mut total = 0;
        for (i, node) in self.layers.iter().enumerate() {
            total += node
                .spec
                .param_count(&self.layer_input_shapes(i, &shapes))?;
        }
        Ok(total)
    }

    /// Summary rows: inputs first (zero parameters), then the layers.
    pub fn summary(&self) -> Result<Vec<LayerRow>> {
        let shapes = self.validate()?;
        let mut rows: Vec<LayerRow> = self
            .inputs
            .iter()
            .map(|input| LayerRow {
                name: input.name.clone(),
                output_shape: input.shape,
                params: 0,
            })
            .collect();
        for (i, node) in self.layers.iter().enumerate() {
            rows.push(LayerRow {
                name: node.name.clone(),
                output_shape: shapes[i],
                params: node
                    .spec
                    .param_count(&self.layer_input_shapes(i, &shapes))?,
            });
        }
        Ok(rows)
    }

    /// Index of the output layer (the last one).
    pub fn output_layer(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Incremental topology construction with automatic layer names.
pub struct TopologyBuilder {
    inputs: Vec<InputSpec>,
    layers: Vec<LayerNode>,
    conv_count: usize,
    pool_count: usize,
}

impl TopologyBuilder {
    pub fn new() -> Self {
        Self {
            inputs: Vec::new(),
            layers: Vec::new(),
            conv_count: 0,
            pool_count: 0,
        }
    }

    pub fn input(&mut self, name: &str, shape: TensorShape) -> PortRef {
        self.inputs.push(InputSpec {
            name: name.to_string(),
            shape,
        });
        PortRef::Input(self.inputs.len() - 1)
    }

    fn push(&mut self, name: String, spec: LayerSpec, inputs: Vec<PortRef>) -> PortRef {
        self.layers.push(LayerNode { name, spec, inputs });
        PortRef::Layer(self.layers.len() - 1)
    }

    fn counted_name(base: &str, count: usize) -> String {
        if count == 0 {
            base.to_string()
        } else {
            format!("{base}_{count}")
        }
    }

    pub fn conv(&mut self, from: PortRef, filters: usize) -> PortRef {
        let name = Self::counted_name("conv1d", self.conv_count);
        self.conv_count += 1;
        self.push(name, LayerSpec::conv(filters), vec![from])
    }

    pub fn pool(&mut self, from: PortRef) -> PortRef {
        let name = Self::counted_name("max_pooling1d", self.pool_count);
        self.pool_count += 1;
        self.push(name, LayerSpec::pool(), vec![from])
    }

    pub fn concat(&mut self, from: &[PortRef]) -> PortRef {
        self.push("concatenate".to_string(), LayerSpec::Concat, from.to_vec())
    }

    pub fn dense(&mut self, name: &str, from: PortRef, units: usize) -> PortRef {
        self.push(name.to_string(), LayerSpec::Dense { units }, vec![from])
    }

    pub fn finish(self) -> Result<Topology> {
        let topology = Topology {
            inputs: self.inputs,
            layers: self.layers,
        };
        topology.validate()?;
        Ok(topology)
    }
}

impl Default for TopologyBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Six-class three-input topology: three convolutional branches over the
/// body-accelerometer, body-gyroscope and total-accelerometer windows, each a
/// conv/pool stack with channel sequence 4, 8, 16, 32, 8, joined by a concat
/// into 96 features and a six-unit dense output. 9246 parameters.
pub fn big_topology() -> Topology {
    let mut b = TopologyBuilder::new();
    let inputs = [
        b.input("model_input1", TensorShape::seq(128, 3)),
        b.input("model_input2", TensorShape::seq(128, 3)),
        b.input("model_input3", TensorShape::seq(128, 3)),
    ];
    let mut tails = Vec::with_capacity(3);
    for input in inputs {
        let mut cur = input;
        for filters in [4, 8, 16, 32, 8] {
            cur = b.conv(cur, filters);
            cur = b.pool(cur);
        }
        tails.push(cur);
    }
    let joined = b.concat(&tails);
    b.dense("model_output", joined, 6);
    b.finish().expect("big topology is well-formed")
}

/// Two-class single-input topology over one 128x3 window: conv/pool stack
/// with channel sequence 4, 4, 2, then a two-unit dense output. 184 parameters.
pub fn little_topology() -> Topology {
    let mut b = TopologyBuilder::new();
    let mut cur = b.input("model_input", TensorShape::seq(128, 3));
    for filters in [4, 4, 2] {
        cur = b.conv(cur, filters);
        cur = b.pool(cur);
    }
    b.dense("model_output", cur, 2);
    b.finish().expect("little topology is well-formed")
}

/// Two-class change-detector topology over a 384x2 input (two adjacent
/// stretched windows as channels): conv/pool stack with channel sequence
/// 4, 4, 2, then a two-unit dense output. 300 parameters.
pub fn dual_topology() -> Topology {
    let mut b = TopologyBuilder::new();
    let mut cur = b.input("model_input", TensorShape::seq(384, 2));
    for filters in [4, 4, 2] {
        cur = b.conv(cur, filters);
        cur = b.pool(cur);
    }
    b.dense("model_output", cur, 2);
    b.finish().expect("dual topology is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row<'a>(rows: &'a [LayerRow], name: &str) -> &'a LayerRow {
        rows.iter()
            .find(|r| r.name == name)
            .unwrap_or_else(|| panic!("no row named {name}"))
    }

    #[test]
    fn big_parameter_table() {
        let t = big_topology();
        assert_eq!(t.total_params().unwrap(), 9246);
        let rows = t.summary().unwrap();

        // Branch conv rows: shapes and parameter counts per level.
        let expected = [
            (128usize, 4usize, 40usize),
            (64, 8, 104),
            (32, 16, 400),
            (16, 32, 1568),
            (8, 8, 776),
        ];
        for branch in 0..3 {
            for (level, &(len, ch, params)) in expected.iter().enumerate() {
                let idx = branch * 5 + level;
                let name = if idx == 0 {
                    "conv1d".to_string()
                } else {
                    format!("conv1d_{idx}")
                };
                let r = row(&rows, &name);
                assert_eq!(r.output_shape, TensorShape::seq(len, ch), "{name}");
                assert_eq!(r.params, params, "{name}");
            }
        }
        assert_eq!(
            row(&rows, "concatenate").output_shape,
            TensorShape::flat(96)
        );
        let out = row(&rows, "model_output");
        assert_eq!(out.output_shape, TensorShape::flat(6));
        assert_eq!(out.params, 582);
    }

    #[test]
    fn little_parameter_table() {
        let t = little_topology();
        assert_eq!(t.total_params().unwrap(), 184);
        let rows = t.summary().unwrap();
        assert_eq!(row(&rows, "conv1d").output_shape, TensorShape::seq(128, 4));
        assert_eq!(row(&rows, "conv1d").params, 40);
        assert_eq!(row(&rows, "conv1d_1").output_shape, TensorShape::seq(64, 4));
        assert_eq!(row(&rows, "conv1d_1").params, 52);
        assert_eq!(row(&rows, "conv1d_2").output_shape, TensorShape::seq(32, 2));
        assert_eq!(row(&rows, "conv1d_2").params, 26);
        let out = row(&rows, "model_output");
        assert_eq!(out.output_shape, TensorShape::flat(2));
        assert_eq!(out.params, 66);
    }

    #[test]
    fn dual_parameter_table() {
        let t = dual_topology();
        assert_eq!(t.total_params().unwrap(), 300);
        let rows = t.summary().unwrap();
        assert_eq!(row(&rows, "conv1d").output_shape, TensorShape::seq(384, 4));
        assert_eq!(row(&rows, "conv1d").params, 28);
        assert_eq!(
            row(&rows, "conv1d_1").output_shape,
            TensorShape::seq(192, 4)
        );
        assert_eq!(row(&rows, "conv1d_1").params, 52);
        assert_eq!(row(&rows, "conv1d_2").output_shape, TensorShape::seq(96, 2));
        assert_eq!(row(&rows, "conv1d_2").params, 26);
        let out = row(&rows, "model_output");
        assert_eq!(out.params, 194);
    }

    #[test]
    fn shape_errors_are_construction_errors() {
        // conv over a flat tensor
        let err = LayerSpec::conv(4)
            .output_shape(&[TensorShape::flat(10)])
            .unwrap_err();
        assert!(matches!(err, Error::GraphConstruction(_)));
        // pool larger than the sequence
        let err = LayerSpec::pool()
            .output_shape(&[TensorShape::seq(1, 4)])
            .unwrap_err();
        assert!(matches!(err, Error::GraphConstruction(_)));
    }

    #[test]
    fn forward_references_rejected() {
        let t = Topology {
            inputs: vec![InputSpec {
                name: "in".into(),
                shape: TensorShape::seq(8, 1),
            }],
            layers: vec![LayerNode {
                name: "conv1d".into(),
                spec: LayerSpec::conv(2),
                inputs: vec![PortRef::Layer(0)], // self-reference
            }],
        };
        assert!(t.validate().is_err());
    }
}
