//! Readers for the public UCI-HAR text layout and a packed binary cache.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{
    rescale, ActivityLabel, HarDataset, RescaleParams, Sample, Window, AXES, STRETCHED_LEN,
    WINDOW_LEN,
};
use crate::error::{Error, Result};

/// Raw float windows for one split, order exactly as shipped.
///
/// `windows[i]` holds the three sensors of sample `i` in the order
/// body_acc, body_gyro, total_acc, each stretched timestep-major to 384 reals.
#[derive(Debug, Clone)]
pub struct RawSplit {
    pub windows: Vec<[Vec<f64>; 3]>,
    pub labels: Vec<ActivityLabel>,
}

#[derive(Debug, Clone)]
pub struct RawDataset {
    pub train: RawSplit,
    pub test: RawSplit,
}

const SENSOR_FILES: [&str; 3] = ["body_acc", "body_gyro", "total_acc"];
const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    if !path.is_file() {
        return Err(Error::DatasetMissing(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(WINDOW_LEN);
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| Error::DataFormat {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("unparseable value {token:?}"),
            })?;
            row.push(v);
        }
        if row.len() != WINDOW_LEN {
            return Err(Error::DataFormat {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!(
                    "expected {} values per row, found {}",
                    WINDOW_LEN,
                    row.len()
                ),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> Result<Vec<ActivityLabel>> {
    if !path.is_file() {
        return Err(Error::DatasetMissing(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        let code: u8 = token.parse().map_err(|_| Error::DataFormat {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: format!("unparseable label {token:?}"),
        })?;
        let label = ActivityLabel::from_code(code).map_err(|_| Error::DataFormat {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: format!("label {code} outside 1..=6"),
        })?;
        labels.push(label);
    }
    Ok(labels)
}

fn load_split(root: &Path, split: &str) -> Result<RawSplit> {
    let signals = root.join(split).join("Inertial Signals");
    // axis_data[sensor][axis] is an N x 128 matrix
    let mut axis_data: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(3);
    for sensor in SENSOR_FILES {
        let mut per_axis = Vec::with_capacity(3);
        for axis in AXIS_NAMES {
            let file = signals.join(format!("{sensor}_{axis}_{split}.txt"));
            per_axis.push(read_matrix(&file)?);
        }
        axis_data.push(per_axis);
    }
    let labels = read_labels(&root.join(split).join(format!("y_{split}.txt")))?;

    let n = labels.len();
    for (si, sensor) in axis_data.iter().enumerate() {
        for (ai, matrix) in sensor.iter().enumerate() {
            if matrix.len() != n {
                return Err(Error::DatasetInvalid(format!(
                    "{split}: {}_{} has {} rows but y_{split}.txt has {}",
                    SENSOR_FILES[si],
                    AXIS_NAMES[ai],
                    matrix.len(),
                    n
                )));
            }
        }
    }

    let mut windows = Vec::with_capacity(n);
    for i in 0..n {
        let mut sensors: [Vec<f64>; 3] = [
            vec![0.0; STRETCHED_LEN],
            vec![0.0; STRETCHED_LEN],
            vec![0.0; STRETCHED_LEN],
        ];
        for (si, sensor) in axis_data.iter().enumerate() {
            for (ai, matrix) in sensor.iter().enumerate() {
                for (t, &v) in matrix[i].iter().enumerate() {
                    sensors[si][t * AXES + ai] = v;
                }
            }
        }
        windows.push(sensors);
    }
    Ok(RawSplit { windows, labels })
}

/// Load the raw float dataset from the public directory layout:
/// `{train,test}/Inertial Signals/{body_acc,body_gyro,total_acc}_{x,y,z}_{split}.txt`
/// plus `y_{split}.txt`. Row order is preserved exactly.
pub fn load_raw(root: &Path) -> Result<RawDataset> {
    if !root.is_dir() {
        return Err(Error::DatasetMissing(root.to_path_buf()));
    }
    Ok(RawDataset {
        train: load_split(root, "train")?,
        test: load_split(root, "test")?,
    })
}

/// Load and rescale the dataset into the integer domain in one step.
pub fn load_ucihar(root: &Path) -> Result<(HarDataset, RescaleParams)> {
    let raw = load_raw(root)?;
    rescale(&raw)
}

const CACHE_MAGIC: &[u8; 4] = b"HARC";
const CACHE_VERSION: u32 = 1;

fn write_samples(out: &mut Vec<u8>, samples: &[Sample]) {
    for s in samples {
        for sensor in [&s.body_acc, &s.body_gyro, &s.total_acc] {
            out.extend(sensor.values().iter().map(|&v| v as u8));
        }
        out.push(s.label.code());
    }
}

/// Write the packed binary cache: magic, version, counts, then per sample the
/// three int8 windows (body_acc, body_gyro, total_acc) and a uint8 label.
pub fn write_cache(dataset: &HarDataset, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(
        12 + (dataset.train.len() + dataset.test.len()) * (3 * STRETCHED_LEN + 1),
    );
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(dataset.train.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dataset.test.len() as u32).to_le_bytes());
    write_samples(&mut out, &dataset.train);
    write_samples(&mut out, &dataset.test);
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

fn read_exact_or(file: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    file.read_exact(buf).map_err(|_| Error::DataFormat {
        path: path.to_path_buf(),
        line: 0,
        message: "cache truncated".into(),
    })
}

fn read_samples(file: &mut impl Read, count: usize, path: &Path) -> Result<Vec<Sample>> {
    let mut samples = Vec::with_capacity(count);
    let mut window_buf = [0u8; STRETCHED_LEN];
    for _ in 0..count {
        let mut windows = Vec::with_capacity(3);
        for _ in 0..3 {
            read_exact_or(file, &mut window_buf, path)?;
            windows.push(Window::new(window_buf.iter().map(|&b| b as i8).collect())?);
        }
        let mut label_buf = [0u8; 1];
        read_exact_or(file, &mut label_buf, path)?;
        let label = ActivityLabel::from_code(label_buf[0]).map_err(|_| Error::DataFormat {
            path: path.to_path_buf(),
            line: 0,
            message: format!("label {} outside 1..=6", label_buf[0]),
        })?;
        let total_acc = windows.pop().unwrap();
        let body_gyro = windows.pop().unwrap();
        let body_acc = windows.pop().unwrap();
        samples.push(Sample {
            body_acc,
            body_gyro,
            total_acc,
            label,
        });
    }
    Ok(samples)
}

/// Read a cache produced by [`write_cache`].
pub fn read_cache(path: &Path) -> Result<HarDataset> {
    if !path.is_file() {
        return Err(Error::DatasetMissing(path.to_path_buf()));
    }
    let path_buf = path.to_path_buf();
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; 12];
    read_exact_or(&mut file, &mut header, &path_buf)?;
    if &header[0..4] != CACHE_MAGIC {
        return Err(Error::DataFormat {
            path: path_buf,
            line: 0,
            message: "bad magic; not a dataset cache".into(),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::DataFormat {
            path: path_buf,
            line: 0,
            message: format!("unsupported cache version {version}"),
        });
    }
    let train_count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut count_buf = [0u8; 4];
    read_exact_or(&mut file, &mut count_buf, &path_buf)?;
    let test_count = u32::from_le_bytes(count_buf) as usize;
    let train = read_samples(&mut file, train_count, &path_buf)?;
    let test = read_samples(&mut file, test_count, &path_buf)?;
    Ok(HarDataset { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    /// Write a tiny dataset directory in the public layout.
    pub(crate) fn write_fixture(root: &Path, rows: &[(f64, u8)]) {
        for split in ["train", "test"] {
            let signals = root.join(split).join("Inertial Signals");
            fs::create_dir_all(&signals).unwrap();
            for sensor in SENSOR_FILES {
                for axis in AXIS_NAMES {
                    let mut text = String::new();
                    for &(base, _) in rows {
                        let row: Vec<String> = (0..WINDOW_LEN)
                            .map(|t| format!("{:.6e}", base + t as f64 * 1e-3))
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

    #[test]
    fn fixture_loads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &[(0.0, 1), (1.0, 4), (-1.0, 4)]);
        let raw = load_raw(dir.path()).unwrap();
        assert_eq!(raw.train.windows.len(), 3);
        assert_eq!(raw.test.windows.len(), 3);
        assert_eq!(
            raw.train.labels,
            vec![
                ActivityLabel::Walking,
                ActivityLabel::Sitting,
                ActivityLabel::Sitting
            ]
        );
        // order preserved: second sample is the base-1.0 one
        assert!(raw.train.windows[1][0][0] > raw.train.windows[0][0][0]);
    }

    #[test]
    fn truncated_row_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &[(0.0, 1)]);
        // Corrupt one row: drop a value.
        let bad = dir
            .path()
            .join("train/Inertial Signals/body_gyro_y_train.txt");
        let text = fs::read_to_string(&bad).unwrap();
        let truncated: Vec<&str> = text.split_whitespace().take(127).collect();
        fs::write(&bad, truncated.join(" ")).unwrap();
        let err = load_raw(dir.path()).unwrap_err();
        match err {
            Error::DataFormat {
                path,
                line,
                message,
            } => {
                assert!(path.ends_with("body_gyro_y_train.txt"));
                assert_eq!(line, 1);
                assert!(message.contains("127"), "message: {message}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn bad_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &[(0.0, 9)]);
        assert!(matches!(
            load_raw(dir.path()).unwrap_err(),
            Error::DataFormat { .. }
        ));
    }

    #[test]
    fn missing_directory_rejected() {
        let err = load_raw(Path::new("/nonexistent/har")).unwrap_err();
        assert!(matches!(err, Error::DatasetMissing(_)));
    }

    #[test]
    fn cache_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), &[(0.0, 1), (0.5, 2)]);
        let (dataset, _) = load_ucihar(dir.path()).unwrap();
        let cache1 = dir.path().join("cache.bin");
        let cache2 = dir.path().join("cache2.bin");
        write_cache(&dataset, &cache1).unwrap();
        let reloaded = read_cache(&cache1).unwrap();
        assert_eq!(reloaded.train, dataset.train);
        assert_eq!(reloaded.test, dataset.test);
        write_cache(&reloaded, &cache2).unwrap();
        assert_eq!(fs::read(&cache1).unwrap(), fs::read(&cache2).unwrap());
    }
}
