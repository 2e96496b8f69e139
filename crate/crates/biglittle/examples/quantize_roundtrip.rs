//! Affine UINT8 quantization basics: the input convention, round trips and
//! integer requantization.
//!
//! ```bash
//! cargo run --example quantize_roundtrip
//! ```

use biglittle::quant::{dequantize, quantize, requantize, QuantParams};

fn main() {
    // The input convention maps [-128, 127] onto bytes [0, 255].
    let input = QuantParams::input();
    println!(
        "input convention: scale {} zero_point {}",
        input.scale, input.zero_point
    );
    for x in [-128.0, -1.0, 0.0, 1.0, 127.0] {
        println!("  {x:>7} -> byte {:>3}", input.quantize_value(x));
    }

    // Round trip: quantize then dequantize stays within half a step.
    let qp = QuantParams::new(0.5, 128).unwrap();
    let values = [-60.0, -0.3, 0.0, 17.25, 63.49];
    let tensor = quantize(&values, &[5], qp).unwrap();
    let back = dequantize(&tensor);
    println!("\nround trip at scale {}:", qp.scale);
    for (x, b) in values.iter().zip(&back) {
        println!("  {x:>7} -> {b:>7}  (error {:+.3})", b - x);
    }

    // Layers rescale int32 accumulators back into the byte domain.
    let accumulators = [0, 1000, -20000, 987_654];
    let bytes = requantize(&accumulators, 0.01, 128).unwrap();
    println!("\nrequantize with effective scale 0.01, zero point 128:");
    for (acc, byte) in accumulators.iter().zip(&bytes) {
        println!("  acc {acc:>8} -> byte {byte:>3}");
    }

    // Saturation clamps; nothing ever wraps.
    println!(
        "\nsaturation: 1e9 -> {}, -1e9 -> {}",
        input.quantize_value(1e9),
        input.quantize_value(-1e9)
    );
}
