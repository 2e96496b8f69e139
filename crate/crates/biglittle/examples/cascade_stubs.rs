//! The switching controller in isolation: perfect stub models over a labeled
//! stream show how invocation counts fall, and a single missed change shows
//! the error-propagation difference between the little and dual secondaries.
//!
//! ```bash
//! cargo run --example cascade_stubs
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};

use biglittle::cascade::{
    run_sequence, CascadeConfig, LittleBank, ModelBundle, PairDetector, PrimaryModel, Verdict,
};
use biglittle::data::{ActivityLabel, Sample, Window, STRETCHED_LEN};
use biglittle::error::Result;

struct OracleBig;
impl PrimaryModel for OracleBig {
    fn classify(&self, sample: &Sample) -> Result<ActivityLabel> {
        Ok(sample.label)
    }
}

struct OracleLittles;
impl LittleBank for OracleLittles {
    fn verdict(&self, target: ActivityLabel, sample: &Sample) -> Result<Verdict> {
        Ok(if sample.label == target {
            Verdict::Same
        } else {
            Verdict::Changed
        })
    }
}

/// Pair oracle that can be told to miss one change.
struct FlakyPair {
    lie_at_call: Option<usize>,
    calls: AtomicUsize,
}
impl PairDetector for FlakyPair {
    fn verdict(&self, prev: &Sample, current: &Sample) -> Result<Verdict> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        if Some(call) == self.lie_at_call {
            return Ok(Verdict::Same);
        }
        Ok(if prev.label == current.label {
            Verdict::Same
        } else {
            Verdict::Changed
        })
    }
}

fn stream(labels: &[ActivityLabel]) -> Vec<Sample> {
    labels
        .iter()
        .map(|&label| {
            let w = Window::new(vec![0; STRETCHED_LEN]).unwrap();
            Sample {
                body_acc: w.clone(),
                body_gyro: w.clone(),
                total_acc: w,
                label,
            }
        })
        .collect()
}

fn main() {
    use ActivityLabel::*;
    // ten windows per activity, six activities: five changes
    let labels: Vec<ActivityLabel> = ActivityLabel::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, 10))
        .collect();
    let samples = stream(&labels);

    let bundle = ModelBundle::new()
        .with_big(OracleBig)
        .with_littles(OracleLittles)
        .with_dual(FlakyPair {
            lie_at_call: None,
            calls: AtomicUsize::new(0),
        });
    println!("60-sample stream, perfect stub models:");
    for config in [
        CascadeConfig::BigOnly,
        CascadeConfig::BigSixLittle,
        CascadeConfig::BigDual,
    ] {
        let run = run_sequence(&samples, &bundle, &config).unwrap();
        println!(
            "  {:<12} big {:>2}  secondary {:>2}  accuracy {:.2}",
            config.name(),
            run.stats.big,
            run.stats.secondary(),
            run.accuracy_against_truth(&samples)
        );
    }

    // One missed change: the little bank re-checks against the stale label
    // and recovers next step; the dual only ever compares adjacent windows,
    // so the stale label sticks.
    let labels = [
        Walking, Walking, Walking, Sitting, Sitting, Sitting, Sitting, Sitting,
    ];
    let samples = stream(&labels);
    println!("\nmissed change at step 3 (call index 2):");

    struct FlakyLittles(AtomicUsize);
    impl LittleBank for FlakyLittles {
        fn verdict(&self, target: ActivityLabel, sample: &Sample) -> Result<Verdict> {
            if self.0.fetch_add(1, Ordering::SeqCst) == 2 {
                return Ok(Verdict::Same);
            }
            Ok(if sample.label == target {
                Verdict::Same
            } else {
                Verdict::Changed
            })
        }
    }
    let bundle = ModelBundle::new()
        .with_big(OracleBig)
        .with_littles(FlakyLittles(AtomicUsize::new(0)));
    let run = run_sequence(&samples, &bundle, &CascadeConfig::BigSixLittle).unwrap();
    let emitted: Vec<u8> = run.labels.iter().map(|l| l.code()).collect();
    println!("  big+six little emits {emitted:?} (recovers after one step)");

    let bundle = ModelBundle::new().with_big(OracleBig).with_dual(FlakyPair {
        lie_at_call: Some(2),
        calls: AtomicUsize::new(0),
    });
    let run = run_sequence(&samples, &bundle, &CascadeConfig::BigDual).unwrap();
    let emitted: Vec<u8> = run.labels.iter().map(|l| l.code()).collect();
    println!("  big+dual       emits {emitted:?} (stale label propagates)");
}
