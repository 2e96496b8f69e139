//! The whole pipeline in one run: load (or synthesize) a dataset, train the
//! big, six little and dual models, quantize them, drive every cascade
//! configuration over the test stream and price the runs with the device
//! cost model.
//!
//! With BIGLITTLE_DATASET pointing at the extracted dataset directory this
//! runs on the real data (several minutes of training); otherwise it uses a
//! synthetic stand-in so the demo works anywhere.
//!
//! ```bash
//! cargo run --release --example full_pipeline
//! ```

use std::path::PathBuf;

use biglittle::cascade::{
    run_sequence, CascadeConfig, DistanceTrigger, ModelBundle, QuantizedBig, QuantizedDual,
    QuantizedLittleBank,
};
use biglittle::cost::{estimate, DeviceProfile};
use biglittle::data::synthetic::{synthetic_dataset, SyntheticSpec};
use biglittle::data::{build_mcu_sequence, load_ucihar, ActivityLabel, Sensor};
use biglittle::distance::DistanceMetric;
use biglittle::nn::ModelKind;
use biglittle::train::{
    build_dual_dataset, evaluate, post_training_quantize, train, Hyperparams, LabeledSet,
};

fn main() {
    let (dataset, epochs_big, epochs_small) =
        match std::env::var_os(biglittle::cli::DATASET_ENV).filter(|v| !v.is_empty()) {
            Some(root) => {
                println!("loading dataset from {:?}", root);
                let (ds, _) = load_ucihar(&PathBuf::from(root)).expect("dataset loads");
                (ds, 100, 60)
            }
            None => {
                println!("BIGLITTLE_DATASET not set; using a synthetic stand-in");
                let ds = synthetic_dataset(&SyntheticSpec {
                    train_per_class: 60,
                    test_per_class: 12,
                    run_length: 10,
                    noise: 6.0,
                    seed: 42,
                });
                (ds, 30, 30)
            }
        };
    println!(
        "train {} / test {} samples\n",
        dataset.train.len(),
        dataset.test.len()
    );

    let hp_big = Hyperparams {
        epochs: epochs_big,
        seed: 1,
        ..Hyperparams::default()
    };
    let hp_small = Hyperparams {
        epochs: epochs_small,
        seed: 1,
        ..Hyperparams::default()
    };

    let started = std::time::Instant::now();
    let big_set = LabeledSet::for_big(&dataset.train);
    let big = train(ModelKind::Big, &big_set, None, &hp_big).expect("big trains");
    println!(
        "big trained: float test accuracy {:.4} ({:.0?})",
        evaluate(&big.model, &LabeledSet::for_big(&dataset.test)).unwrap(),
        started.elapsed()
    );
    let big_q = post_training_quantize(&big.model, &[]).unwrap();

    let mut littles = Vec::new();
    for target in ActivityLabel::ALL {
        let set = LabeledSet::for_little(&dataset.train, target, Sensor::TotalAcc);
        let outcome = train(ModelKind::Little(target), &set, None, &hp_small).unwrap();
        littles.push(post_training_quantize(&outcome.model, &[]).unwrap());
    }
    println!("six little models trained");

    let dual_pairs = build_dual_dataset(&dataset.train).unwrap();
    println!(
        "dual pairs: {} change / {} continuance",
        dual_pairs.change_count, dual_pairs.continuance_count
    );
    let dual = train(ModelKind::Dual, &dual_pairs.set, None, &hp_small).unwrap();
    let dual_q = post_training_quantize(&dual.model, &[]).unwrap();

    let bundle = ModelBundle::new()
        .with_big(QuantizedBig::new(big_q).unwrap())
        .with_littles(QuantizedLittleBank::new(littles).unwrap())
        .with_dual(QuantizedDual::new(dual_q).unwrap())
        .with_distance(DistanceTrigger::new(DistanceMetric::manhattan(), 8000.0).unwrap());

    let profile = DeviceProfile::builtin("ecm3532").unwrap();
    let mcu_sequence = build_mcu_sequence(&dataset.test).unwrap();
    println!(
        "\n{:<13} {:>9} {:>6} {:>10} {:>12} | {:>9} {:>5}",
        "config", "accuracy", "big", "lat ms", "energy mJ", "mcu60 acc", "big"
    );
    for config in [
        CascadeConfig::BigOnly,
        CascadeConfig::BigSixLittle,
        CascadeConfig::BigDual,
        CascadeConfig::BigDistance {
            metric: DistanceMetric::manhattan(),
            threshold: 8000.0,
        },
    ] {
        let full = run_sequence(&dataset.test, &bundle, &config).unwrap();
        let cost = estimate(&full.stats, &profile, 48).unwrap();
        let mcu = run_sequence(&mcu_sequence, &bundle, &config).unwrap();
        println!(
            "{:<13} {:>9.4} {:>6} {:>10.1} {:>12.3} | {:>9.4} {:>5}",
            config.name(),
            full.accuracy_against_truth(&dataset.test),
            full.stats.big,
            cost.total_latency_ms,
            cost.total_energy_mj,
            mcu.accuracy_against_truth(&mcu_sequence),
            mcu.stats.big,
        );
    }
    println!("\ntotal time {:.0?}", started.elapsed());
}
