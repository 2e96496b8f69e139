//! Distance triggers: the Minkowski family and a fitted Mahalanobis metric.
//!
//! ```bash
//! cargo run --example distance_metrics
//! ```

use biglittle::data::synthetic::{synthetic_dataset, SyntheticSpec};
use biglittle::distance::{fit_mahalanobis, mahalanobis, minkowski, MahalanobisMetric};

fn main() {
    let x = [1.0, 2.0];
    let y = [3.0, 5.0];
    println!(
        "Manhattan (p=1)  between {x:?} and {y:?}: {}",
        minkowski(&x, &y, 1.0).unwrap()
    );
    let a = [0.0, 3.0];
    let b = [4.0, 0.0];
    println!(
        "Euclidean (p=2)  between {a:?} and {b:?}: {}",
        minkowski(&a, &b, 2.0).unwrap()
    );
    println!(
        "Minkowski (p=3)  between {a:?} and {b:?}: {:.4}",
        minkowski(&a, &b, 3.0).unwrap()
    );

    // Under an identity covariance, Mahalanobis degenerates to Euclidean.
    let identity = MahalanobisMetric::identity(2);
    println!(
        "Mahalanobis (identity covariance): {} (equals Euclidean)",
        mahalanobis(&a, &b, &identity).unwrap()
    );

    // Fit a covariance on stretched total-accelerometer windows; adjacent
    // same-class pairs sit closer than cross-class pairs on average.
    let dataset = synthetic_dataset(&SyntheticSpec::default());
    let vectors: Vec<Vec<f64>> = dataset
        .train
        .iter()
        .map(|s| s.total_acc.stretched())
        .collect();
    let metric = fit_mahalanobis(&vectors).unwrap();
    println!(
        "\nfitted Mahalanobis on {} windows (dim {}, shrinkage {})",
        vectors.len(),
        metric.dim(),
        metric.shrinkage()
    );

    let mut same = (0.0, 0usize);
    let mut cross = (0.0, 0usize);
    for pair in dataset.train.windows(2) {
        let d = mahalanobis(
            &pair[0].total_acc.stretched(),
            &pair[1].total_acc.stretched(),
            &metric,
        )
        .unwrap();
        if pair[0].label == pair[1].label {
            same = (same.0 + d, same.1 + 1);
        } else {
            cross = (cross.0 + d, cross.1 + 1);
        }
    }
    println!(
        "adjacent pairs: same-activity mean {:.2} ({} pairs), cross-activity mean {:.2} ({} pairs)",
        same.0 / same.1 as f64,
        same.1,
        cross.0 / cross.1 as f64,
        cross.1
    );
}
