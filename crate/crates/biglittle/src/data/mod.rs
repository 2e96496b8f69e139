//! Windowed inertial-sensor data: labels, samples, dataset loading and the
//! fixed 60-sample device-evaluation sequence.
//!
//! A sample is one 128-timestep window from each of three sensors (body
//! accelerometer, body gyroscope, total accelerometer), three axes each,
//! rescaled to integers in [-128, 127]. The public text layout of the UCI-HAR
//! dataset is read by [`load_ucihar`]; [`synthetic`] generates structured
//! stand-in data for tests and demos.

mod load;
pub mod synthetic;

pub use load::{load_raw, load_ucihar, read_cache, write_cache, RawDataset, RawSplit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{QuantParams, QuantizedTensor};

/// Timesteps per window.
pub const WINDOW_LEN: usize = 128;
/// Axes per sensor.
pub const AXES: usize = 3;
/// Flattened window length (`WINDOW_LEN * AXES`), also the stretched-vector length.
pub const STRETCHED_LEN: usize = WINDOW_LEN * AXES;

/// The six activity classes, with stable integer codes 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityLabel {
    Walking = 1,
    WalkingUpstairs = 2,
    WalkingDownstairs = 3,
    Sitting = 4,
    Standing = 5,
    Laying = 6,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 6] = [
        ActivityLabel::Walking,
        ActivityLabel::WalkingUpstairs,
        ActivityLabel::WalkingDownstairs,
        ActivityLabel::Sitting,
        ActivityLabel::Standing,
        ActivityLabel::Laying,
    ];

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(code.wrapping_sub(1) as usize)
            .copied()
            .ok_or_else(|| Error::DatasetInvalid(format!("label {code} outside 1..=6")))
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Zero-based class index, the network output position.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::DatasetInvalid(format!("class index {index} outside 0..=5")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Walking => "WALKING",
            ActivityLabel::WalkingUpstairs => "WALKING_UPSTAIRS",
            ActivityLabel::WalkingDownstairs => "WALKING_DOWNSTAIRS",
            ActivityLabel::Sitting => "SITTING",
            ActivityLabel::Standing => "STANDING",
            ActivityLabel::Laying => "LAYING",
        }
    }
}

impl std::fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl Serialize for ActivityLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for ActivityLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        ActivityLabel::from_code(code).map_err(serde::de::Error::custom)
    }
}

/// The three inertial sensors a sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sensor {
    BodyAcc,
    BodyGyro,
    TotalAcc,
}

impl Sensor {
    pub const ALL: [Sensor; 3] = [Sensor::BodyAcc, Sensor::BodyGyro, Sensor::TotalAcc];

    pub fn name(self) -> &'static str {
        match self {
            Sensor::BodyAcc => "body_acc",
            Sensor::BodyGyro => "body_gyro",
            Sensor::TotalAcc => "total_acc",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sensor::BodyAcc => 0,
            Sensor::BodyGyro => 1,
            Sensor::TotalAcc => 2,
        }
    }
}

/// One 128x3 sensor window, values in [-128, 127], stored timestep-major
/// (`data[t * 3 + axis]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    data: Vec<i8>,
}

impl Window {
    pub fn new(data: Vec<i8>) -> Result<Self> {
        if data.len() != STRETCHED_LEN {
            return Err(Error::ShapeMismatch(format!(
                "window needs {} values ({} timesteps x {} axes), got {}",
                STRETCHED_LEN,
                WINDOW_LEN,
                AXES,
                data.len()
            )));
        }
        Ok(Self { data })
    }

    pub fn get(&self, t: usize, axis: usize) -> i8 {
        self.data[t * AXES + axis]
    }

    pub fn values(&self) -> &[i8] {
        &self.data
    }

    /// The window stretched into one 384-vector of reals, timestep-major.
    pub fn stretched(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Float model input: the same 384 reals as [`Window::stretched`].
    pub fn to_input(&self) -> Vec<f64> {
        self.stretched()
    }

    /// Quantized runtime input under the input convention {scale 1, zero 128}:
    /// byte = value + 128, exactly.
    pub fn to_quantized(&self) -> QuantizedTensor {
        let data = self
            .data
            .iter()
            .map(|&v| (i16::from(v) + 128) as u8)
            .collect();
        QuantizedTensor {
            shape: vec![WINDOW_LEN, AXES],
            data,
            qparams: QuantParams::input(),
        }
    }
}

/// One labeled data sample: a window per sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub body_acc: Window,
    pub body_gyro: Window,
    pub total_acc: Window,
    pub label: ActivityLabel,
}

impl Sample {
    /// Project one sensor's window out of the sample.
    pub fn sensor(&self, sensor: Sensor) -> &Window {
        match sensor {
            Sensor::BodyAcc => &self.body_acc,
            Sensor::BodyGyro => &self.body_gyro,
            Sensor::TotalAcc => &self.total_acc,
        }
    }
}

/// Train and test splits of rescaled samples.
#[derive(Debug, Clone)]
pub struct HarDataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl HarDataset {
    /// Per-class sample counts, indexed by `ActivityLabel::index`.
    pub fn class_counts(samples: &[Sample]) -> [usize; 6] {
        let mut counts = [0usize; 6];
        for s in samples {
            counts[s.label.index()] += 1;
        }
        counts
    }
}

/// Per-sensor affine rescale fitted on the training split only.
///
/// Maps the sensor's global [min, max] onto [-128, 127] with
/// half-away-from-zero rounding; out-of-range test values clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl RescaleParams {
    /// Fit the per-sensor global min/max over raw training windows.
    pub fn fit(train: &RawSplit) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for sample in &train.windows {
            for (si, window) in sample.iter().enumerate() {
                for &v in window {
                    min[si] = min[si].min(v);
                    max[si] = max[si].max(v);
                }
            }
        }
        Self { min, max }
    }

    /// Rescale one raw value from the given sensor into [-128, 127].
    pub fn apply(&self, sensor: usize, x: f64) -> i8 {
        let (lo, hi) = (self.min[sensor], self.max[sensor]);
        if hi <= lo {
            return 0; // constant signal
        }
        let scaled = (x - lo) / (hi - lo) * 255.0 - 128.0;
        scaled.round().clamp(-128.0, 127.0) as i8
    }

    /// Rescale a whole raw split into integer samples, preserving order.
    pub fn apply_split(&self, raw: &RawSplit) -> Result<Vec<Sample>> {
        raw.windows
            .iter()
            .zip(&raw.labels)
            .map(|(sensors, &label)| {
                let mut windows = Vec::with_capacity(3);
                for (si, raw_window) in sensors.iter().enumerate() {
                    let data = raw_window.iter().map(|&v| self.apply(si, v)).collect();
                    windows.push(Window::new(data)?);
                }
                let total_acc = windows.pop().unwrap();
                let body_gyro = windows.pop().unwrap();
                let body_acc = windows.pop().unwrap();
                Ok(Sample {
                    body_acc,
                    body_gyro,
                    total_acc,
                    label,
                })
            })
            .collect()
    }
}

/// Rescale raw floats into the integer domain, fitting on train only.
pub fn rescale(raw: &RawDataset) -> Result<(HarDataset, RescaleParams)> {
    for (split_name, split) in [("train", &raw.train), ("test", &raw.test)] {
        for (i, sensors) in split.windows.iter().enumerate() {
            for window in sensors {
                if let Some(bad) = window.iter().find(|v| !v.is_finite()) {
                    return Err(Error::DatasetInvalid(format!(
                        "non-finite value {bad} in {split_name} sample {i}"
                    )));
                }
            }
        }
    }
    let params = RescaleParams::fit(&raw.train);
    let dataset = HarDataset {
        train: params.apply_split(&raw.train)?,
        test: params.apply_split(&raw.test)?,
    };
    Ok((dataset, params))
}

/// Build the 60-sample device-evaluation sequence: the first ten test samples
/// of each class in dataset order, concatenated in class order I..VI. The
/// result has exactly five label changes.
pub fn build_mcu_sequence(test: &[Sample]) -> Result<Vec<Sample>> {
    let mut per_class: Vec<Vec<&Sample>> = vec![Vec::new(); 6];
    for s in test {
        let bucket = &mut per_class[s.label.index()];
        if bucket.len() < 10 {
            bucket.push(s);
        }
    }
    for (i, bucket) in per_class.iter().enumerate() {
        if bucket.len() < 10 {
            let label = ActivityLabel::from_index(i).unwrap();
            return Err(Error::DatasetInvalid(format!(
                "class {label} has only {} test samples, need 10",
                bucket.len()
            )));
        }
    }
    Ok(per_class.into_iter().flatten().cloned().collect())
}

/// Number of adjacent label changes in a sample stream.
pub fn count_label_changes(samples: &[Sample]) -> usize {
    samples
        .windows(2)
        .filter(|pair| pair[0].label != pair[1].label)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_of(value: i8) -> Window {
        Window::new(vec![value; STRETCHED_LEN]).unwrap()
    }

    pub(crate) fn sample_of(value: i8, label: ActivityLabel) -> Sample {
        Sample {
            body_acc: window_of(value),
            body_gyro: window_of(value),
            total_acc: window_of(value),
            label,
        }
    }

    #[test]
    fn label_codes_round_trip() {
        for label in ActivityLabel::ALL {
            assert_eq!(ActivityLabel::from_code(label.code()).unwrap(), label);
            assert_eq!(ActivityLabel::from_index(label.index()).unwrap(), label);
        }
        assert!(ActivityLabel::from_code(0).is_err());
        assert!(ActivityLabel::from_code(7).is_err());
        assert_eq!(ActivityLabel::Walking.name(), "WALKING");
    }

    #[test]
    fn window_quantizes_to_input_convention() {
        let mut data = vec![0i8; STRETCHED_LEN];
        data[0] = -128;
        data[1] = 0;
        data[2] = 127;
        let w = Window::new(data).unwrap();
        let q = w.to_quantized();
        assert_eq!(q.data[0], 0);
        assert_eq!(q.data[1], 128);
        assert_eq!(q.data[2], 255);
        assert_eq!(q.shape, vec![WINDOW_LEN, AXES]);
    }

    #[test]
    fn sensor_projection_partitions_the_sample() {
        let s = Sample {
            body_acc: window_of(1),
            body_gyro: window_of(2),
            total_acc: window_of(3),
            label: ActivityLabel::Sitting,
        };
        assert_eq!(s.sensor(Sensor::BodyAcc).get(0, 0), 1);
        assert_eq!(s.sensor(Sensor::BodyGyro).get(5, 2), 2);
        assert_eq!(s.sensor(Sensor::TotalAcc).get(127, 1), 3);
    }

    #[test]
    fn rescale_endpoints_and_midpoint() {
        let raw = RawSplit {
            windows: vec![[vec![-2.0; STRETCHED_LEN], vec![0.0; STRETCHED_LEN], {
                let mut v = vec![0.0; STRETCHED_LEN];
                v[0] = -2.0;
                v[1] = 2.0;
                v[2] = 1.0;
                v[3] = 0.0;
                v
            }]],
            labels: vec![ActivityLabel::Walking],
        };
        let params = RescaleParams::fit(&raw);
        assert_eq!(params.apply(2, -2.0), -128);
        assert_eq!(params.apply(2, 2.0), 127);
        // midpoint of [-2, 2] maps near zero
        let mid = params.apply(2, 0.0);
        assert!((-1..=1).contains(&mid), "midpoint mapped to {mid}");
        // value 1 in [-2, 2]: (3/4)*255 - 128 = 63.25
        let v = params.apply(2, 1.0);
        assert!((63..=65).contains(&v), "got {v}");
        // constant sensor maps to 0
        assert_eq!(params.apply(1, 0.0), 0);
    }

    #[test]
    fn rescale_clamps_out_of_train_range() {
        let raw = RawSplit {
            windows: vec![[vec![0.0; STRETCHED_LEN], vec![0.0; STRETCHED_LEN], {
                let mut v = vec![0.0; STRETCHED_LEN];
                v[0] = -1.0;
                v[1] = 1.0;
                v
            }]],
            labels: vec![ActivityLabel::Walking],
        };
        let params = RescaleParams::fit(&raw);
        assert_eq!(params.apply(2, 5.0), 127);
        assert_eq!(params.apply(2, -5.0), -128);
    }

    #[test]
    fn mcu_sequence_structure() {
        // 12 per class, shuffled-ish order: interleave classes.
        let mut test = Vec::new();
        for rep in 0..12 {
            for label in ActivityLabel::ALL {
                test.push(sample_of(rep as i8, label));
            }
        }
        let seq = build_mcu_sequence(&test).unwrap();
        assert_eq!(seq.len(), 60);
        assert_eq!(count_label_changes(&seq), 5);
        let counts = HarDataset::class_counts(&seq);
        assert_eq!(counts, [10; 6]);
        // change positions are exactly the class boundaries
        let change_positions: Vec<usize> = seq
            .windows(2)
            .enumerate()
            .filter(|(_, p)| p[0].label != p[1].label)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(change_positions, vec![10, 20, 30, 40, 50]);
    }

    #[test]
    fn mcu_sequence_refuses_scarce_class() {
        let test: Vec<Sample> = (0..9)
            .map(|_| sample_of(0, ActivityLabel::Walking))
            .collect();
        assert!(build_mcu_sequence(&test).is_err());
    }
}
