//! Pack a quantized model's weights and emit them as a C header, then parse
//! the header back and verify the bytes round-trip.
//!
//! ```bash
//! cargo run --example export_c_header
//! ```

use biglittle::data::ActivityLabel;
use biglittle::export::{c_header, pack_weights, parse_c_header};
use biglittle::nn::build_little;

fn main() {
    let graph = build_little(ActivityLabel::Walking);
    let bytes = pack_weights(&graph);
    println!(
        "little model: {} weight/bias bytes packed in layer order",
        bytes.len()
    );

    let header = c_header(&bytes, "model_weights");
    let preview: Vec<&str> = header.lines().take(4).collect();
    println!("\nheader preview:");
    for line in preview {
        println!("  {line}");
    }
    println!("  ...");
    for line in header
        .lines()
        .rev()
        .take(2)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
    {
        println!("  {line}");
    }

    let parsed = parse_c_header(&header).unwrap();
    assert_eq!(parsed, bytes);
    println!(
        "\nparsed {} bytes back out of the header: round trip exact",
        parsed.len()
    );
}
