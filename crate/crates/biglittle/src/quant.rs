//! Affine UINT8 quantization primitives.
//!
//! Real values map to unsigned bytes through `real = (q - zero_point) * scale`.
//! Every tensor the integer runtime touches carries one `(scale, zero_point)`
//! pair; layer accumulators are 32-bit signed integers rescaled back to bytes
//! with [`requantize`]. Rounding is half-away-from-zero everywhere, which is
//! what `f64::round` does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest scale a degenerate (constant) weight tensor is given.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Affine quantization parameters for one tensor.
///
/// The toolkit's input convention is `scale = 1`, `zero_point = 128`, which
/// maps the signed byte range [-128, 127] onto [0, 255]. Intermediate
/// activations default to `scale = 1`, `zero_point = 0` (the [0, 255] range).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub scale: f64,
    pub zero_point: u8,
}

impl QuantParams {
    pub fn new(scale: f64, zero_point: u8) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidQuantParams(format!(
                "scale must be a positive finite real, got {scale}"
            )));
        }
        Ok(Self { scale, zero_point })
    }

    /// Parameters for model inputs: one step per integer, real zero at byte 128.
    pub fn input() -> Self {
        Self {
            scale: 1.0,
            zero_point: 128,
        }
    }

    /// Default activation parameters: the real range [0, 255] mapped 1:1.
    pub fn activation() -> Self {
        Self {
            scale: 1.0,
            zero_point: 0,
        }
    }

    /// Asymmetric per-tensor parameters covering `[min, max]`.
    ///
    /// The range is first widened to include zero so that real 0.0 is exactly
    /// representable. Returns the parameters plus a flag telling whether the
    /// range was degenerate (min == max) and the scale floor kicked in.
    pub fn from_range(min: f64, max: f64) -> Result<(Self, bool)> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidQuantParams(format!(
                "range endpoints must be finite, got [{min}, {max}]"
            )));
        }
        if min > max {
            return Err(Error::InvalidQuantParams(format!(
                "empty range [{min}, {max}]"
            )));
        }
        let lo = min.min(0.0);
        let hi = max.max(0.0);
        let mut scale = (hi - lo) / 255.0;
        let degenerate = scale < SCALE_FLOOR;
        if degenerate {
            scale = SCALE_FLOOR;
        }
        let zero_point = (-lo / scale).round().clamp(0.0, 255.0) as u8;
        Ok((Self { scale, zero_point }, degenerate))
    }

    /// Quantize a single value: `clamp(round(x / scale) + zero_point, 0, 255)`.
    pub fn quantize_value(&self, x: f64) -> u8 {
        ((x / self.scale).round() + f64::from(self.zero_point)).clamp(0.0, 255.0) as u8
    }

    /// Dequantize a single byte: `(q - zero_point) * scale`.
    pub fn dequantize_value(&self, q: u8) -> f64 {
        (f64::from(q) - f64::from(self.zero_point)) * self.scale
    }
}

/// A flat UINT8 buffer in row-major order plus its shape and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    pub shape: Vec<usize>,
    pub data: Vec<u8>,
    pub qparams: QuantParams,
}

impl QuantizedTensor {
    pub fn new(shape: Vec<usize>, data: Vec<u8>, qparams: QuantParams) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} holds {} elements but buffer has {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Self {
            shape,
            data,
            qparams,
        })
    }

    /// All-`zero_point` tensor (dequantizes to real zeros).
    pub fn zeros(shape: Vec<usize>, qparams: QuantParams) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![qparams.zero_point; n],
            qparams,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Quantize a real tensor. Rejects non-finite values, naming the offending index.
pub fn quantize(real: &[f64], shape: &[usize], qparams: QuantParams) -> Result<QuantizedTensor> {
    let expected: usize = shape.iter().product();
    if expected != real.len() {
        return Err(Error::ShapeMismatch(format!(
            "shape {:?} holds {} elements but input has {}",
            shape,
            expected,
            real.len()
        )));
    }
    let mut data = Vec::with_capacity(real.len());
    for (index, &x) in real.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index, value: x });
        }
        data.push(qparams.quantize_value(x));
    }
    QuantizedTensor::new(shape.to_vec(), data, qparams)
}

/// Recover real values: `real_i = (q_i - zero_point) * scale`.
pub fn dequantize(q: &QuantizedTensor) -> Vec<f64> {
    q.data
        .iter()
        .map(|&v| q.qparams.dequantize_value(v))
        .collect()
}

/// Rescale one int32 accumulator into the output byte domain.
pub fn requantize_value(acc: i32, effective_scale: f64, out_zero_point: u8) -> u8 {
    ((f64::from(acc) * effective_scale).round() + f64::from(out_zero_point)).clamp(0.0, 255.0) as u8
}

/// Rescale an int32 accumulator tensor into the output byte domain.
///
/// `effective_scale` is `(in_scale * weight_scale) / out_scale`, precomputed
/// per layer. The result is deterministic across platforms: one f64 multiply,
/// one half-away-from-zero round, one clamp.
pub fn requantize(acc: &[i32], effective_scale: f64, out_zero_point: u8) -> Result<Vec<u8>> {
    if !effective_scale.is_finite() || effective_scale <= 0.0 {
        return Err(Error::InvalidQuantParams(format!(
            "effective scale must be positive and finite, got {effective_scale}"
        )));
    }
    Ok(acc
        .iter()
        .map(|&a| requantize_value(a, effective_scale, out_zero_point))
        .collect())
}
