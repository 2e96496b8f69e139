//! The device cost model: translate invocation counts into latency, energy
//! and battery-life estimates across the shipped device profiles.
//!
//! ```bash
//! cargo run --example energy_report
//! ```

use biglittle::cascade::CascadeCounters;
use biglittle::cost::{battery_life_ratio, estimate, DeviceProfile, BUILTIN_PROFILES};

fn main() {
    // Invocation counts for a 2947-sample run: the baseline runs the big
    // model every time; the adaptive configuration wakes it 406 times.
    let baseline = CascadeCounters {
        big: 2947,
        little: 0,
        dual: 0,
        distance: 0,
    };
    let adaptive = CascadeCounters {
        big: 406,
        little: 2541,
        dual: 0,
        distance: 0,
    };

    println!(
        "{:<10} {:>6} {:>14} {:>12} {:>14} {:>12}",
        "device", "MHz", "baseline mJ", "adaptive mJ", "energy ratio", "battery x"
    );
    for (name, _) in BUILTIN_PROFILES {
        let profile = DeviceProfile::builtin(name).unwrap();
        for point in &profile.points {
            let base = estimate(&baseline, &profile, point.freq_mhz).unwrap();
            let adapt = estimate(&adaptive, &profile, point.freq_mhz).unwrap();
            println!(
                "{:<10} {:>6} {:>14.2} {:>12.2} {:>14.3} {:>12.1}",
                name,
                point.freq_mhz,
                base.total_energy_mj,
                adapt.total_energy_mj,
                adapt.total_energy_mj / base.total_energy_mj,
                battery_life_ratio(&base, &adapt).unwrap(),
            );
        }
    }

    // Cross-device: a standard-voltage part running the baseline against a
    // near-threshold part running the adaptive cascade.
    let stm = DeviceProfile::builtin("stm32l4").unwrap();
    let ecm = DeviceProfile::builtin("ecm3532").unwrap();
    let stm_baseline = estimate(&baseline, &stm, 48).unwrap();
    let ecm_adaptive = estimate(&adaptive, &ecm, 48).unwrap();
    println!(
        "\nstm32l4 baseline vs ecm3532 adaptive at 48 MHz: {:.1}x battery life",
        battery_life_ratio(&stm_baseline, &ecm_adaptive).unwrap()
    );

    // Per-path breakdown for one report.
    println!("\necm3532 @ 48 MHz, adaptive run breakdown:");
    for path in &ecm_adaptive.per_path {
        println!(
            "  {:<9} count {:>5}  {:>10.1} ms  {:>8.3} mJ",
            path.path, path.count, path.latency_ms, path.energy_mj
        );
    }
    println!(
        "  total: {:.1} ms, {:.3} mJ",
        ecm_adaptive.total_latency_ms, ecm_adaptive.total_energy_mj
    );
}
