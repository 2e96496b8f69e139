//! Adaptive big–little CNN cascade inference toolkit.
//!
//! Streams of fixed-width inertial windows are classified by a cascade that
//! keeps an expensive six-class "big" network asleep while a cheap secondary
//! decides whether the activity changed: one binary "little" network per
//! class, a single paired-window "dual" change detector, or a plain distance
//! trigger. Everything runs as integer UINT8 inference, and a calibrated
//! device cost model turns invocation counts into latency, energy and
//! battery-life estimates.
//!
//! The pieces, bottom to top:
//!
//! - [`quant`] — affine UINT8 quantization and integer requantization
//! - [`nn`] — layer graph, integer kernels, topology constructors, manifests
//! - [`train`] — float-domain training and post-training quantization
//! - [`data`] — dataset loading, rescaling, the 60-sample evaluation sequence
//! - [`distance`] — Minkowski and Mahalanobis change triggers
//! - [`cascade`] — the switching controller and its counters
//! - [`cost`] — device profiles and the latency/energy estimator
//! - [`export`] — C-header weight export
//! - [`cli`] — the command surface behind the `biglittle` binary
//!
//! Each capability has a runnable demo under `examples/`:
//!
//! ```bash
//! cargo run --example quantize_roundtrip
//! cargo run --example model_topologies
//! cargo run --example train_synthetic
//! cargo run --example cascade_stubs
//! cargo run --example distance_metrics
//! cargo run --example energy_report
//! cargo run --example export_c_header
//! cargo run --release --example full_pipeline
//! ```

pub mod cascade;
pub mod cli;
pub mod cost;
pub mod data;
pub mod distance;
pub mod error;
pub mod export;
pub mod nn;
pub mod quant;
pub mod train;

pub use error::{Error, Result};
