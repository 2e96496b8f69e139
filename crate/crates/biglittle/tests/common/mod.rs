//! Shared helpers for the integration suites.
#![allow(dead_code)] // each test target uses its own subset

use std::fs;
use std::path::Path;

use biglittle::data::{ActivityLabel, Sample, Window, STRETCHED_LEN};

pub const SENSORS: [&str; 3] = ["body_acc", "body_gyro", "total_acc"];
pub const AXES: [&str; 3] = ["x", "y", "z"];

/// Write a tiny dataset directory in the public text layout. Each row is a
/// slowly varying ramp around `base` so rescaling has a usable range.
pub fn write_fixture_dataset(root: &Path, train_rows: &[(f64, u8)], test_rows: &[(f64, u8)]) {
    for (split, rows) in [("train", train_rows), ("test", test_rows)] {
        let signals = root.join(split).join("Inertial Signals");
        fs::create_dir_all(&signals).unwrap();
        for sensor in SENSORS {
            for axis in AXES {
                let mut text = String::new();
                for &(base, _) in rows {
                    let row: Vec<String> = (0..128)
                        .map(|t| format!("{:.6e}", base + t as f64 * 1e-2))
                        .collect();
                    text.push_str(&row.join(" "));
                    text.push('\n');
                }
                fs::write(signals.join(format!("{sensor}_{axis}_{split}.txt")), &text).unwrap();
            }
        }
        let labels: String = rows.iter().map(|&(_, l)| format!("{l}\n")).collect();
        fs::write(root.join(split).join(format!("y_{split}.txt")), labels).unwrap();
    }
}

/// A sample whose windows are filled with one value; handy for stub streams.
pub fn sample_of(value: i8, label: ActivityLabel) -> Sample {
    let w = Window::new(vec![value; STRETCHED_LEN]).unwrap();
    Sample {
        body_acc: w.clone(),
        body_gyro: w.clone(),
        total_acc: w,
        label,
    }
}

/// Build a stream of samples carrying the given labels; the first byte of
/// each body_acc window stores the sample index so stubs can read it back.
pub fn indexed_stream(labels: &[ActivityLabel]) -> Vec<Sample> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut data = vec![0i8; STRETCHED_LEN];
            data[0] = i as i8;
            let body_acc = Window::new(data).unwrap();
            let rest = Window::new(vec![0; STRETCHED_LEN]).unwrap();
            Sample {
                body_acc,
                body_gyro: rest.clone(),
                total_acc: rest,
                label,
            }
        })
        .collect()
}

/// Read the index byte written by [`indexed_stream`].
pub fn sample_index(sample: &Sample) -> usize {
    sample.body_acc.values()[0] as usize
}
