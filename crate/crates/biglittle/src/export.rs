//! C-header export of packed model weights.
//!
//! The packing walks layers in graph order and emits each weight buffer's raw
//! bytes followed by its bias values as little-endian int32. The header
//! declares one unsigned-byte array plus a length constant, in the style of a
//! hex dump, and [`parse_c_header`] reads the bytes back for round-trip
//! checks.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{manifest, ModelGraph};

/// Concatenate all layer parameters into one byte buffer: per layer, weight
/// bytes then bias int32s (little-endian).
pub fn pack_weights(graph: &ModelGraph) -> Vec<u8> {
    let mut out = Vec::new();
    for params in &graph.params {
        if let Some(w) = &params.weights {
            out.extend_from_slice(&w.data);
        }
        if let Some(bias) = &params.bias {
            for b in bias {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
    }
    out
}

/// Render bytes as a C unsigned-char array with a length constant.
pub fn c_header(bytes: &[u8], symbol: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("unsigned char {symbol}[] = {{"));
    for (i, b) in bytes.iter().enumerate() {
        if i % 12 == 0 {
            out.push_str("\n  ");
        } else {
            out.push(' ');
        }
        out.push_str(&format!("0x{b:02x},"));
    }
    out.push('\n');
    out.push_str("};\n");
    out.push_str(&format!("unsigned int {symbol}_len = {};\n", bytes.len()));
    out
}

/// Read the byte array back out of a header produced by [`c_header`].
pub fn parse_c_header(text: &str) -> Result<Vec<u8>> {
    let open = text
        .find('{')
        .ok_or_else(|| Error::Manifest("no array initializer found".into()))?;
    let close = text[open..]
        .find('}')
        .map(|i| open + i)
        .ok_or_else(|| Error::Manifest("unterminated array initializer".into()))?;
    let mut bytes = Vec::new();
    for token in text[open + 1..close].split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let hex = token
            .strip_prefix("0x")
            .ok_or_else(|| Error::Manifest(format!("unexpected token {token:?}")))?;
        let value = u8::from_str_radix(hex, 16)
            .map_err(|_| Error::Manifest(format!("bad byte literal {token:?}")))?;
        bytes.push(value);
    }
    // Cross-check the length constant when present.
    if let Some(idx) = text.find("_len = ") {
        let rest = &text[idx + "_len = ".len()..];
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if let Ok(n) = digits.parse::<usize>() {
            if n != bytes.len() {
                return Err(Error::Manifest(format!(
                    "length constant {n} does not match {} array bytes",
                    bytes.len()
                )));
            }
        }
    }
    Ok(bytes)
}

/// Load a manifest and write its packed weights as a C header. Returns the
/// number of bytes exported.
pub fn export_header(manifest_path: &Path, out_path: &Path, symbol: &str) -> Result<usize> {
    let graph = manifest::load(manifest_path)?;
    let bytes = pack_weights(&graph);
    fs::write(out_path, c_header(&bytes, symbol))?;
    Ok(bytes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityLabel;
    use crate::nn::{build_little, LayerParams, ModelGraph, ModelKind};
    use crate::quant::{QuantParams, QuantizedTensor};

    /// A one-layer graph holding exactly the given weight bytes and no bias.
    fn toy_graph(weights: Vec<u8>) -> ModelGraph {
        use crate::nn::{InputSpec, LayerNode, LayerSpec, PortRef, TensorShape, Topology};
        let units = 1;
        let features = weights.len();
        ModelGraph {
            kind: ModelKind::Dual,
            topology: Topology {
                inputs: vec![InputSpec {
                    name: "model_input".into(),
                    shape: TensorShape::flat(features),
                }],
                layers: vec![LayerNode {
                    name: "model_output".into(),
                    spec: LayerSpec::Dense { units },
                    inputs: vec![PortRef::Input(0)],
                }],
            },
            params: vec![LayerParams {
                weights: Some(
                    QuantizedTensor::new(vec![units, features], weights, QuantParams::activation())
                        .unwrap(),
                ),
                bias: Some(vec![]),
                degenerate_scale: false,
            }],
            input_qparams: vec![QuantParams::input()],
            output_qparams: vec![QuantParams::activation()],
        }
    }

    #[test]
    fn four_weight_toy_manifest_yields_four_bytes() {
        let graph = toy_graph(vec![0xde, 0xad, 0xbe, 0xef]);
        let bytes = pack_weights(&graph);
        assert_eq!(bytes, vec![0xde, 0xad, 0xbe, 0xef]);
        let header = c_header(&bytes, "toy_weights");
        assert!(header.contains("unsigned char toy_weights[]"));
        assert!(header.contains("toy_weights_len = 4"));
        assert_eq!(parse_c_header(&header).unwrap(), bytes);
    }

    #[test]
    fn empty_array_is_allowed() {
        let header = c_header(&[], "empty");
        assert!(header.contains("empty_len = 0"));
        assert_eq!(parse_c_header(&header).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn packed_bytes_round_trip_for_a_real_model() {
        let graph = build_little(ActivityLabel::Standing);
        let bytes = pack_weights(&graph);
        // 158 weight bytes + 26 bias values x 4 bytes
        let weight_bytes: usize = graph
            .params
            .iter()
            .filter_map(|p| p.weights.as_ref())
            .map(|w| w.data.len())
            .sum();
        let bias_bytes: usize = graph
            .params
            .iter()
            .filter_map(|p| p.bias.as_ref())
            .map(|b| b.len() * 4)
            .sum();
        assert_eq!(bytes.len(), weight_bytes + bias_bytes);
        let header = c_header(&bytes, "model_weights");
        assert_eq!(parse_c_header(&header).unwrap(), bytes);
    }

    #[test]
    fn corrupted_length_constant_is_caught() {
        let header = c_header(&[1, 2, 3], "w").replace("w_len = 3", "w_len = 7");
        assert!(parse_c_header(&header).is_err());
    }
}
