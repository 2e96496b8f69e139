//! Data-dependent invariants that only the real dataset can witness.
//! Every test self-skips unless BIGLITTLE_DATASET points at the extracted
//! dataset directory.

mod common;

use std::path::PathBuf;

use biglittle::cascade::{run_sequence, CascadeConfig, ModelBundle, QuantizedBig};
use biglittle::cli::cmd_sensor_study;
use biglittle::data::{build_mcu_sequence, load_ucihar, ActivityLabel, HarDataset, Sensor};
use biglittle::distance::minkowski;
use biglittle::nn::{argmax_lowest, ModelKind};
use biglittle::train::{evaluate, post_training_quantize, train, Hyperparams, LabeledSet};

fn dataset() -> Option<HarDataset> {
    let root = match std::env::var_os(biglittle::cli::DATASET_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => {
            println!("realdata: SKIPPED — set BIGLITTLE_DATASET to run");
            return None;
        }
    };
    Some(load_ucihar(&root).unwrap().0)
}

#[test]
fn per_class_train_counts_stay_under_2000() {
    let Some(ds) = dataset() else { return };
    let counts = HarDataset::class_counts(&ds.train);
    for (i, &count) in counts.iter().enumerate() {
        assert!(
            count > 0 && count < 2000,
            "class {} has {count} train samples",
            i + 1
        );
    }
}

#[test]
fn total_accelerometer_wins_the_sensor_study() {
    let Some(ds) = dataset() else { return };
    let hp = Hyperparams {
        epochs: 30,
        seed: 4,
        ..Hyperparams::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let table = cmd_sensor_study(&ds, &hp, dir.path()).unwrap();
    assert_eq!(table.best_sensor(), "total_acc", "{:?}", table.rows);
    let overall = |name: &str| {
        table
            .rows
            .iter()
            .find(|r| r.sensor == name)
            .unwrap()
            .overall
    };
    assert!(overall("total_acc") >= overall("body_gyro"));
}

// Adjacent same-activity windows of the walking classes can lie farther
// apart (Manhattan) than adjacent cross-activity windows, which is why a
// single distance threshold cannot cleanly detect changes.
#[test]
fn walking_distances_defeat_a_clean_threshold() {
    let Some(ds) = dataset() else { return };
    let seq = build_mcu_sequence(&ds.test).unwrap();
    let mut max_same_walking: f64 = f64::NEG_INFINITY;
    let mut min_cross: f64 = f64::INFINITY;
    for pair in seq.windows(2) {
        let d = minkowski(
            &pair[0].total_acc.stretched(),
            &pair[1].total_acc.stretched(),
            1.0,
        )
        .unwrap();
        let walking = |l: ActivityLabel| (l.code() as usize) <= 3;
        if pair[0].label == pair[1].label {
            if walking(pair[0].label) {
                max_same_walking = max_same_walking.max(d);
            }
        } else {
            min_cross = min_cross.min(d);
        }
    }
    assert!(
        max_same_walking > min_cross,
        "same-class walking max {max_same_walking} vs cross-class min {min_cross}"
    );
}

#[test]
fn integer_inference_agrees_with_float_on_test_windows() {
    let Some(ds) = dataset() else { return };
    let hp = Hyperparams {
        epochs: 40,
        seed: 2,
        ..Hyperparams::default()
    };
    let set = LabeledSet::for_big(&ds.train);
    let outcome = train(ModelKind::Big, &set, None, &hp).unwrap();
    let graph = post_training_quantize(&outcome.model, &[]).unwrap();

    let test_set = LabeledSet::for_big(&ds.test);
    let float_acc = evaluate(&outcome.model, &test_set).unwrap();
    println!("realdata: float big accuracy {float_acc:.4}");

    let bundle = ModelBundle::new().with_big(QuantizedBig::new(graph).unwrap());
    let run = run_sequence(&ds.test, &bundle, &CascadeConfig::BigOnly).unwrap();
    let mut agree = 0;
    for (inputs, label) in test_set.inputs.iter().zip(&run.labels) {
        let float_label = argmax_lowest(&outcome.model.forward(inputs).unwrap());
        agree += usize::from(float_label == label.index());
    }
    let rate = agree as f64 / test_set.len() as f64;
    assert!(rate >= 0.95, "integer/float argmax agreement {rate}");
}

#[test]
fn little_total_acc_beats_body_gyro() {
    let Some(ds) = dataset() else { return };
    let hp = Hyperparams {
        epochs: 30,
        seed: 4,
        ..Hyperparams::default()
    };
    let target = ActivityLabel::Sitting;
    let mut accs = Vec::new();
    for sensor in [Sensor::TotalAcc, Sensor::BodyGyro] {
        let set = LabeledSet::for_little(&ds.train, target, sensor);
        let outcome = train(ModelKind::Little(target), &set, None, &hp).unwrap();
        let test = LabeledSet::for_little(&ds.test, target, sensor);
        accs.push(evaluate(&outcome.model, &test).unwrap());
    }
    assert!(
        accs[0] >= accs[1],
        "total-acc {} vs body-gyro {}",
        accs[0],
        accs[1]
    );
}
