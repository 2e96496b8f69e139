//! Device cost model: translate cascade invocation counts into latency,
//! energy and battery-life estimates.
//!
//! Power is treated as constant per device and frequency while the core is
//! active — the configurations differ only in how long inference takes — so
//! energy is latency times active power. Per-path latency comes from the
//! big-model latency at the chosen frequency point: the little model runs
//! 12x faster by default, and the dual and distance paths are configurable
//! multiples of the little latency. Sleep power is carried in the profile but
//! ignored within a run (samples arrive back to back).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeCounters;
use crate::error::{Error, Result};

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// One operating point of a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub freq_mhz: u32,
    pub active_power_mw: f64,
    pub big_latency_ms: f64,
}

/// Per-device cost parameters. Shipped defaults live under `profiles/` and
/// load with [`DeviceProfile::builtin`]; any JSON file with the same schema
/// works through [`DeviceProfile::from_file`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    #[serde(default)]
    pub notes: String,
    pub points: Vec<FrequencyPoint>,
    /// little latency = big latency * this ratio (default 1/12).
    pub little_ratio: f64,
    /// dual latency = little latency * this multiple.
    pub dual_little_mult: f64,
    /// distance latency = little latency * this multiple.
    pub distance_little_mult: f64,
    pub sleep_power_mw: f64,
    pub battery_capacity_mwh: f64,
}

pub const BUILTIN_PROFILES: [(&str, &str); 4] = [
    ("ecm3532", include_str!("../profiles/ecm3532.json")),
    ("stm32l4", include_str!("../profiles/stm32l4.json")),
    ("apollo2", include_str!("../profiles/apollo2.json")),
    ("apollo3", include_str!("../profiles/apollo3.json")),
];

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::CostModel(format!(
                "profile {} has no frequency points",
                self.name
            )));
        }
        for p in &self.points {
            if !positive(p.active_power_mw) || !positive(p.big_latency_ms) {
                return Err(Error::CostModel(format!(
                    "profile {}: powers and latencies must be positive at {} MHz",
                    self.name, p.freq_mhz
                )));
            }
        }
        if !positive(self.little_ratio)
            || !positive(self.dual_little_mult)
            || !positive(self.distance_little_mult)
            || !positive(self.sleep_power_mw)
            || !positive(self.battery_capacity_mwh)
        {
            return Err(Error::CostModel(format!(
                "profile {}: ratios, sleep power and battery capacity must be positive",
                self.name
            )));
        }
        Ok(())
    }

    /// One of the shipped profiles: ecm3532, stm32l4, apollo2, apollo3.
    pub fn builtin(name: &str) -> Result<Self> {
        for (key, text) in BUILTIN_PROFILES {
            if key == name {
                let profile: DeviceProfile = serde_json::from_str(text)?;
                profile.validate()?;
                return Ok(profile);
            }
        }
        Err(Error::MissingArtifact(format!(
            "no builtin device profile named {name:?} (have: {})",
            BUILTIN_PROFILES.map(|(k, _)| k).join(", ")
        )))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingArtifact(path.display().to_string()));
        }
        let profile: DeviceProfile = serde_json::from_str(&fs::read_to_string(path)?)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn point(&self, freq_mhz: u32) -> Result<&FrequencyPoint> {
        self.points
            .iter()
            .find(|p| p.freq_mhz == freq_mhz)
            .ok_or_else(|| Error::UnknownFrequency {
                device: self.name.clone(),
                freq: freq_mhz,
                available: self.points.iter().map(|p| p.freq_mhz).collect(),
            })
    }

    /// Per-path latencies (ms) at a frequency point.
    pub fn path_latencies_ms(&self, freq_mhz: u32) -> Result<PathLatencies> {
        let point = self.point(freq_mhz)?;
        let little = point.big_latency_ms * self.little_ratio;
        Ok(PathLatencies {
            big: point.big_latency_ms,
            little,
            dual: little * self.dual_little_mult,
            distance: little * self.distance_little_mult,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLatencies {
    pub big: f64,
    pub little: f64,
    pub dual: f64,
    pub distance: f64,
}

/// Cost attributed to one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCost {
    pub path: String,
    pub count: usize,
    pub latency_ms: f64,
    pub energy_mj: f64,
}

/// Latency/energy estimate for one run, with per-path breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub device: String,
    pub freq_mhz: u32,
    pub per_path: Vec<PathCost>,
    pub total_latency_ms: f64,
    pub total_energy_mj: f64,
    /// Battery capacity divided by the mean active power; absent for
    /// zero-latency (empty) runs.
    pub battery_life_hours: Option<f64>,
}

/// Estimate the cost of a run from its invocation counters.
///
/// Latency is the count-weighted sum of per-path latencies; energy is that
/// latency times the frequency point's active power (1 mW * 1 ms = 1 uJ).
pub fn estimate(
    stats: &CascadeCounters,
    profile: &DeviceProfile,
    freq_mhz: u32,
) -> Result<EnergyReport> {
    profile.validate()?;
    let latencies = profile.path_latencies_ms(freq_mhz)?;
    let power_mw = profile.point(freq_mhz)?.active_power_mw;

    let entries = [
        ("big", stats.big, latencies.big),
        ("little", stats.little, latencies.little),
        ("dual", stats.dual, latencies.dual),
        ("distance", stats.distance, latencies.distance),
    ];
    let mut per_path = Vec::with_capacity(entries.len());
    let mut total_latency_ms = 0.0;
    let mut total_energy_mj = 0.0;
    for (path, count, unit_latency) in entries {
        let latency_ms = count as f64 * unit_latency;
        let energy_mj = latency_ms * power_mw / 1000.0;
        total_latency_ms += latency_ms;
        total_energy_mj += energy_mj;
        per_path.push(PathCost {
            path: path.to_string(),
            count,
            latency_ms,
            energy_mj,
        });
    }

    let battery_life_hours = if total_latency_ms > 0.0 {
        // Mean power during the run equals the active power by construction;
        // capacity (mWh) over power (mW) gives hours.
        let mean_power_mw = total_energy_mj / (total_latency_ms / 1000.0);
        Some(profile.battery_capacity_mwh / mean_power_mw)
    } else {
        None
    };

    Ok(EnergyReport {
        device: profile.name.clone(),
        freq_mhz,
        per_path,
        total_latency_ms,
        total_energy_mj,
        battery_life_hours,
    })
}

/// How many times longer the candidate lasts on the same battery:
/// baseline energy over candidate energy for the same workload.
pub fn battery_life_ratio(baseline: &EnergyReport, candidate: &EnergyReport) -> Result<f64> {
    if !positive(candidate.total_energy_mj) {
        return Err(Error::CostModel(
            "candidate consumed no energy; ratio undefined".into(),
        ));
    }
    Ok(baseline.total_energy_mj / candidate.total_energy_mj)
}
