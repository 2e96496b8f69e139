//! Command implementations behind the `biglittle` binary: dataset
//! preparation, training, cascade simulation, the sensor study and weight
//! export. Everything here is a plain library function so the pipeline can be
//! driven without a shell.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cascade::{
    run_sequence, write_trace_jsonl, CascadeConfig, DistanceTrigger, ModelBundle, QuantizedBig,
    QuantizedDual, QuantizedLittleBank, Verdict,
};
use crate::cost::{estimate, DeviceProfile, EnergyReport};
use crate::data::{
    build_mcu_sequence, load_ucihar, read_cache, write_cache, ActivityLabel, HarDataset, Sample,
    Sensor,
};
use crate::distance::{fit_mahalanobis, DistanceMetric};
use crate::error::{Error, Result};
use crate::nn::{manifest, total_params, ModelKind};
use crate::train::{
    build_dual_dataset, post_training_quantize, train, training_log_csv, Hyperparams, LabeledSet,
    TrainOutcome,
};

/// Environment variable consulted when no dataset path is given.
pub const DATASET_ENV: &str = "BIGLITTLE_DATASET";

/// Which part of the test data a simulation runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// All test samples.
    FullTest,
    /// The fixed 60-sample device-evaluation sequence.
    Mcu60,
}

impl Scope {
    pub fn name(&self) -> &'static str {
        match self {
            Scope::FullTest => "full-test",
            Scope::Mcu60 => "mcu-60",
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub models_dir: PathBuf,
    pub config: CascadeConfig,
    pub device: String,
    pub freq_mhz: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Resolve the dataset path from an explicit flag or the environment.
pub fn resolve_dataset_path(explicit: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    match std::env::var_os(DATASET_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => Err(Error::Usage(format!(
            "no dataset given: pass --dataset or set {DATASET_ENV}"
        ))),
    }
}

/// Load a dataset from either a prepared cache file or a raw directory.
pub fn load_dataset(path: &Path) -> Result<HarDataset> {
    if path.is_file() {
        read_cache(path)
    } else {
        load_ucihar(path).map(|(dataset, _)| dataset)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PrepareSummary {
    pub train_count: usize,
    pub test_count: usize,
    pub cache_path: PathBuf,
}

/// Load the raw dataset layout, rescale it and write the binary cache plus
/// the fitted rescale parameters.
pub fn cmd_prepare(root: &Path, out_dir: &Path) -> Result<PrepareSummary> {
    fs::create_dir_all(out_dir)?;
    let (dataset, params) = load_ucihar(root)?;
    let cache_path = out_dir.join("har.bin");
    write_cache(&dataset, &cache_path)?;
    fs::write(
        out_dir.join("rescale.json"),
        serde_json::to_string_pretty(&params)?,
    )?;
    Ok(PrepareSummary {
        train_count: dataset.train.len(),
        test_count: dataset.test.len(),
        cache_path,
    })
}

/// Deterministic stratified carve: within each class, every seventh instance
/// (by per-class position) moves to the validation set, about 15%.
pub fn carve_validation(set: &LabeledSet) -> (LabeledSet, LabeledSet) {
    let mut class_seen = vec![0usize; set.num_classes];
    let mut train = LabeledSet {
        inputs: Vec::new(),
        labels: Vec::new(),
        num_classes: set.num_classes,
    };
    let mut val = LabeledSet {
        inputs: Vec::new(),
        labels: Vec::new(),
        num_classes: set.num_classes,
    };
    for (inputs, &label) in set.inputs.iter().zip(&set.labels) {
        let position = class_seen[label];
        class_seen[label] += 1;
        let target = if position % 7 == 3 {
            &mut val
        } else {
            &mut train
        };
        target.inputs.push(inputs.clone());
        target.labels.push(label);
    }
    (train, val)
}

/// The labeled set a model kind trains on, derived from the train split.
pub fn training_set_for(kind: ModelKind, dataset: &HarDataset) -> Result<LabeledSet> {
    Ok(match kind {
        ModelKind::Big => LabeledSet::for_big(&dataset.train),
        ModelKind::Little(target) => {
            LabeledSet::for_little(&dataset.train, target, Sensor::TotalAcc)
        }
        ModelKind::Dual => build_dual_dataset(&dataset.train)?.set,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainSummary {
    pub kind: String,
    pub total_params: usize,
    pub final_loss: f64,
    pub final_val_accuracy: Option<f64>,
    pub manifest_path: PathBuf,
}

/// Train one model, quantize it and write the manifest plus the training log.
pub fn cmd_train(
    kind: ModelKind,
    dataset: &HarDataset,
    hp: &Hyperparams,
    out_dir: &Path,
) -> Result<TrainSummary> {
    fs::create_dir_all(out_dir)?;
    let full = training_set_for(kind, dataset)?;
    let (train_set, val_set) = carve_validation(&full);
    let TrainOutcome { model, log } = train(kind, &train_set, Some(&val_set), hp)?;
    let graph = post_training_quantize(&model, &[])?;

    let stem = kind.file_stem();
    let manifest_path = out_dir.join(format!("{stem}.json"));
    manifest::save(&graph, &manifest_path)?;
    fs::write(
        out_dir.join(format!("{stem}_log.csv")),
        training_log_csv(&log),
    )?;

    Ok(TrainSummary {
        kind: kind.to_string(),
        total_params: total_params(&graph),
        final_loss: log.last().map(|e| e.loss).unwrap_or(f64::NAN),
        final_val_accuracy: log.last().and_then(|e| e.val_accuracy),
        manifest_path,
    })
}

/// Build the cascade metric named on the command line. Mahalanobis fits its
/// covariance on the train split's stretched total-accelerometer vectors.
pub fn build_metric(name: &str, dataset: &HarDataset) -> Result<DistanceMetric> {
    match name {
        "manhattan" => Ok(DistanceMetric::manhattan()),
        "euclidean" => Ok(DistanceMetric::euclidean()),
        "mahalanobis" => {
            let vectors: Vec<Vec<f64>> = dataset
                .train
                .iter()
                .map(|s| s.total_acc.stretched())
                .collect();
            Ok(DistanceMetric::Mahalanobis(fit_mahalanobis(&vectors)?))
        }
        other => Err(Error::Usage(format!(
            "unknown metric {other:?} (have manhattan, euclidean, mahalanobis)"
        ))),
    }
}

/// Load every model the configuration requires from the models directory.
pub fn load_bundle(models_dir: &Path, config: &CascadeConfig) -> Result<ModelBundle> {
    let load = |stem: &str| -> Result<_> {
        let path = models_dir.join(format!("{stem}.json"));
        manifest::load(&path)
            .map_err(|_| Error::MissingArtifact(format!("model {stem} ({})", path.display())))
    };
    let mut bundle = ModelBundle::new().with_big(QuantizedBig::new(load("big")?)?);
    match config {
        CascadeConfig::BigSixLittle => {
            let mut graphs = Vec::with_capacity(6);
            for label in ActivityLabel::ALL {
                graphs.push(load(&format!("little_{}", label.code()))?);
            }
            bundle = bundle.with_littles(QuantizedLittleBank::new(graphs)?);
        }
        CascadeConfig::BigDual => {
            bundle = bundle.with_dual(QuantizedDual::new(load("dual")?)?);
        }
        CascadeConfig::BigDistance { .. } => {
            bundle = bundle.with_distance(DistanceTrigger::from_config(config)?);
        }
        CascadeConfig::BigOnly => {}
    }
    Ok(bundle)
}

/// One row of the simulation report CSV.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReportRow {
    pub config: String,
    pub scope: String,
    pub accuracy: f64,
    pub big_count: usize,
    pub secondary_count: usize,
    pub latency_ms: f64,
    pub energy_mj: f64,
    pub device: String,
    pub freq_mhz: u32,
}

/// Render report rows with the stable schema
/// `config,scope,accuracy,big_count,secondary_count,latency_ms,energy_mJ,device,freq_MHz`.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "config,scope,accuracy,big_count,secondary_count,latency_ms,energy_mJ,device,freq_MHz\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{},{},{:.6},{:.6},{},{}\n",
            r.config,
            r.scope,
            r.accuracy,
            r.big_count,
            r.secondary_count,
            r.latency_ms,
            r.energy_mj,
            r.device,
            r.freq_mhz
        ));
    }
    out
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SimulateSummary {
    pub row: ReportRow,
    pub energy: EnergyReport,
}

/// Run one cascade configuration over the chosen scope and write the report
/// bundle (CSV, JSON and the per-step trace log) into the output directory.
pub fn cmd_simulate(experiment: &ExperimentConfig, scope: Scope) -> Result<SimulateSummary> {
    let dataset = load_dataset(&experiment.dataset)?;
    let bundle = load_bundle(&experiment.models_dir, &experiment.config)?;
    let profile = DeviceProfile::builtin(&experiment.device)
        .or_else(|_| DeviceProfile::from_file(Path::new(&experiment.device)))?;

    let samples: Vec<Sample> = match scope {
        Scope::FullTest => dataset.test.clone(),
        Scope::Mcu60 => build_mcu_sequence(&dataset.test)?,
    };
    let result = run_sequence(&samples, &bundle, &experiment.config)?;
    let energy = estimate(&result.stats, &profile, experiment.freq_mhz)?;
    let accuracy = result.accuracy_against_truth(&samples);

    let row = ReportRow {
        config: experiment.config.name().to_string(),
        scope: scope.name().to_string(),
        accuracy,
        big_count: result.stats.big,
        secondary_count: result.stats.secondary(),
        latency_ms: energy.total_latency_ms,
        energy_mj: energy.total_energy_mj,
        device: profile.name.clone(),
        freq_mhz: experiment.freq_mhz,
    };

    fs::create_dir_all(&experiment.out_dir)?;
    fs::write(
        experiment.out_dir.join("report.csv"),
        report_csv(std::slice::from_ref(&row)),
    )?;
    let summary = SimulateSummary {
        row: row.clone(),
        energy,
    };
    fs::write(
        experiment.out_dir.join("report.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    let mut trace = Vec::new();
    write_trace_jsonl(&result.traces, &samples, &mut trace)?;
    fs::write(experiment.out_dir.join("trace.jsonl"), trace)?;
    Ok(summary)
}

/// Per-sensor accuracy table of the secondary network.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SensorStudyTable {
    /// (sensor name, per-activity accuracy in class order, overall mean).
    pub rows: Vec<SensorStudyRow>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SensorStudyRow {
    pub sensor: String,
    pub per_activity: [f64; 6],
    pub overall: f64,
}

impl SensorStudyTable {
    /// The sensor with the best overall accuracy.
    pub fn best_sensor(&self) -> &str {
        let best = self
            .rows
            .iter()
            .max_by(|a, b| a.overall.total_cmp(&b.overall))
            .expect("table has rows");
        &best.sensor
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "sensor,walking,walking_upstairs,walking_downstairs,sitting,standing,laying,overall\n",
        );
        for r in &self.rows {
            out.push_str(&r.sensor);
            for a in r.per_activity {
                out.push_str(&format!(",{a:.6}"));
            }
            out.push_str(&format!(",{:.6}\n", r.overall));
        }
        out
    }
}

/// Evaluate one binary verdict function per (sensor, activity) over a test
/// split: accuracy of "is this window the target activity".
pub fn sensor_accuracy_table<F>(test: &[Sample], predict: F) -> SensorStudyTable
where
    F: Fn(Sensor, ActivityLabel, &Sample) -> Verdict,
{
    let rows = Sensor::ALL
        .map(|sensor| {
            let mut per_activity = [0.0; 6];
            for target in ActivityLabel::ALL {
                let hits = test
                    .iter()
                    .filter(|s| {
                        let predicted_same = predict(sensor, target, s) == Verdict::Same;
                        predicted_same == (s.label == target)
                    })
                    .count();
                per_activity[target.index()] = hits as f64 / test.len() as f64;
            }
            let overall = per_activity.iter().sum::<f64>() / 6.0;
            SensorStudyRow {
                sensor: sensor.name().to_string(),
                per_activity,
                overall,
            }
        })
        .to_vec();
    SensorStudyTable { rows }
}

/// Train one little model per (sensor, activity) and tabulate test accuracy
/// per sensor. Writes `sensor_study.csv` into the output directory.
pub fn cmd_sensor_study(
    dataset: &HarDataset,
    hp: &Hyperparams,
    out_dir: &Path,
) -> Result<SensorStudyTable> {
    fs::create_dir_all(out_dir)?;
    let mut rows = Vec::with_capacity(3);
    for sensor in Sensor::ALL {
        let mut per_activity = [0.0; 6];
        for target in ActivityLabel::ALL {
            let set = LabeledSet::for_little(&dataset.train, target, sensor);
            let (train_set, val_set) = carve_validation(&set);
            let outcome = train(ModelKind::Little(target), &train_set, Some(&val_set), hp)?;
            let test_set = LabeledSet::for_little(&dataset.test, target, sensor);
            per_activity[target.index()] = crate::train::evaluate(&outcome.model, &test_set)?;
        }
        let overall = per_activity.iter().sum::<f64>() / 6.0;
        rows.push(SensorStudyRow {
            sensor: sensor.name().to_string(),
            per_activity,
            overall,
        });
    }
    let table = SensorStudyTable { rows };
    fs::write(out_dir.join("sensor_study.csv"), table.to_csv())?;
    Ok(table)
}

/// Export a manifest's packed weights as a C header. Returns the byte count.
pub fn cmd_export_header(manifest_path: &Path, out_path: &Path) -> Result<usize> {
    crate::export::export_header(manifest_path, out_path, "model_weights")
}
