//! Train one little model on synthetic data, watch the warm-restart schedule
//! work, then quantize and compare integer inference against the float model.
//!
//! ```bash
//! cargo run --release --example train_synthetic
//! ```

use biglittle::data::synthetic::{synthetic_dataset, SyntheticSpec};
use biglittle::data::{ActivityLabel, Sensor};
use biglittle::nn::{argmax_lowest, infer, ModelKind};
use biglittle::quant::{quantize, QuantParams};
use biglittle::train::{evaluate, post_training_quantize, train, Hyperparams, LabeledSet};

fn main() {
    let dataset = synthetic_dataset(&SyntheticSpec::default());
    let target = ActivityLabel::Walking;
    let train_set = LabeledSet::for_little(&dataset.train, target, Sensor::TotalAcc);
    let test_set = LabeledSet::for_little(&dataset.test, target, Sensor::TotalAcc);

    let hp = Hyperparams {
        epochs: 40,
        seed: 7,
        ..Hyperparams::default()
    };
    println!(
        "training little({}) on {} windows ({} positives)",
        target.code(),
        train_set.len(),
        train_set.labels.iter().sum::<usize>()
    );
    let outcome = train(ModelKind::Little(target), &train_set, Some(&test_set), &hp).unwrap();
    for stats in outcome.log.iter().step_by(8) {
        println!(
            "  epoch {:>3}  lr {:.5}  loss {:.4}  val {:.3}",
            stats.epoch,
            hp.lr_at(stats.epoch as f64),
            stats.loss,
            stats.val_accuracy.unwrap()
        );
    }
    let float_acc = evaluate(&outcome.model, &test_set).unwrap();
    println!("float test accuracy: {float_acc:.4}");

    // Post-training quantization fixes the input at {1, 128}, activations at
    // the [0, 255] window, and derives weight scales from min/max.
    let graph = post_training_quantize(&outcome.model, &train_set.inputs).unwrap();
    let mut agree = 0;
    let mut hits = 0;
    for (inputs, &label) in test_set.inputs.iter().zip(&test_set.labels) {
        let float_label = argmax_lowest(&outcome.model.forward(inputs).unwrap());
        let q = quantize(&inputs[0], &[128, 3], QuantParams::input()).unwrap();
        let int_label = infer(&graph, &[q]).unwrap().class_index;
        agree += usize::from(int_label == float_label);
        hits += usize::from(int_label == label);
    }
    println!(
        "quantized test accuracy: {:.4}, float/int argmax agreement: {:.4}",
        hits as f64 / test_set.len() as f64,
        agree as f64 / test_set.len() as f64
    );
}
