//! Print the three model topologies with their output shapes and parameter
//! counts, in the familiar layer-summary style.
//!
//! ```bash
//! cargo run --example model_topologies
//! ```

use biglittle::data::ActivityLabel;
use biglittle::nn::{build_big, build_dual, build_little, total_params, ModelGraph};

fn print_summary(title: &str, graph: &ModelGraph) {
    println!("Model: {title}");
    println!("{:<18} {:<18} {:>8}", "Layer", "Output Shape", "Param #");
    println!("{}", "-".repeat(46));
    for row in graph.summary().unwrap() {
        println!(
            "{:<18} {:<18} {:>8}",
            row.name,
            row.output_shape.to_string(),
            row.params
        );
    }
    println!("{}", "-".repeat(46));
    println!("Total params: {}\n", total_params(graph));
}

fn main() {
    print_summary("big (six classes, three sensors)", &build_big());
    print_summary(
        "little (one class vs rest, total accelerometer)",
        &build_little(ActivityLabel::Sitting),
    );
    print_summary("dual (change detector over a window pair)", &build_dual());
}
