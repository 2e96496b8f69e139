//! The adaptive switching controller.
//!
//! A session keeps two registers — the previously emitted label and the
//! previous sample — plus invocation counters. Every step after the first
//! consults the configured secondary (a per-class little model, the dual
//! change detector, or a distance trigger); a "same" verdict re-emits the
//! previous label, a "changed" verdict wakes the big model. Both registers
//! update on every step. The switching happens above the model layer, so
//! models are injected through traits and can be stubbed in tests.

use std::io::Write;

use crate::data::{ActivityLabel, Sample};
use crate::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::nn::{infer, ModelGraph, ModelKind};
use crate::quant::QuantizedTensor;

/// Which configuration the controller runs.
#[derive(Debug, Clone)]
pub enum CascadeConfig {
    BigOnly,
    BigSixLittle,
    BigDual,
    BigDistance {
        metric: DistanceMetric,
        threshold: f64,
    },
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if let CascadeConfig::BigDistance { threshold, .. } = self {
            if !threshold.is_finite() || *threshold <= 0.0 {
                return Err(Error::Cascade(format!(
                    "distance threshold must be positive, got {threshold}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            CascadeConfig::BigOnly => "big-only",
            CascadeConfig::BigSixLittle => "big-little",
            CascadeConfig::BigDual => "big-dual",
            CascadeConfig::BigDistance { .. } => "big-distance",
        }
    }
}

/// Secondary-model answer: is the current window still the previous activity?
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Same,
    Changed,
}

/// The six-class primary model.
pub trait PrimaryModel: Send + Sync {
    fn classify(&self, sample: &Sample) -> Result<ActivityLabel>;
}

/// The bank of per-activity binary models; `target` picks which one runs.
pub trait LittleBank: Send + Sync {
    fn verdict(&self, target: ActivityLabel, sample: &Sample) -> Result<Verdict>;
}

/// A detector over a pair of adjacent samples (dual network or distance trigger).
pub trait PairDetector: Send + Sync {
    fn verdict(&self, prev: &Sample, current: &Sample) -> Result<Verdict>;
}

/// The models a session may need. Populate only what the configuration uses.
#[derive(Default)]
pub struct ModelBundle {
    pub big: Option<Box<dyn PrimaryModel>>,
    pub littles: Option<Box<dyn LittleBank>>,
    pub dual: Option<Box<dyn PairDetector>>,
    pub distance: Option<Box<dyn PairDetector>>,
}

impl ModelBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_big(mut self, big: impl PrimaryModel + 'static) -> Self {
        self.big = Some(Box::new(big));
        self
    }

    pub fn with_littles(mut self, littles: impl LittleBank + 'static) -> Self {
        self.littles = Some(Box::new(littles));
        self
    }

    pub fn with_dual(mut self, dual: impl PairDetector + 'static) -> Self {
        self.dual = Some(Box::new(dual));
        self
    }

    pub fn with_distance(mut self, trigger: impl PairDetector + 'static) -> Self {
        self.distance = Some(Box::new(trigger));
        self
    }

    /// Check that everything the configuration needs is present, before any
    /// inference runs.
    pub fn validate_for(&self, config: &CascadeConfig) -> Result<()> {
        config.validate()?;
        if self.big.is_none() {
            return Err(Error::Cascade(
                "bundle is missing the big model (every configuration needs it)".into(),
            ));
        }
        match config {
            CascadeConfig::BigOnly => Ok(()),
            CascadeConfig::BigSixLittle if self.littles.is_none() => Err(Error::Cascade(
                "big-little configuration needs the six little models".into(),
            )),
            CascadeConfig::BigDual if self.dual.is_none() => Err(Error::Cascade(
                "big-dual configuration needs the dual model".into(),
            )),
            CascadeConfig::BigDistance { .. } if self.distance.is_none() => Err(Error::Cascade(
                "big-distance configuration needs the distance trigger".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Which component produced the emitted label at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathTaken {
    Big,
    /// The little model bound to this activity answered "same".
    Little(ActivityLabel),
    Dual,
    Distance,
}

impl PathTaken {
    pub fn name(&self) -> &'static str {
        match self {
            PathTaken::Big => "big",
            PathTaken::Little(_) => "little",
            PathTaken::Dual => "dual",
            PathTaken::Distance => "distance",
        }
    }
}

/// Observability record for one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepTrace {
    pub index: usize,
    /// The path that produced the emitted label.
    pub path: PathTaken,
    /// The secondary's verdict, when one was consulted.
    pub verdict: Option<Verdict>,
    pub emitted: ActivityLabel,
}

/// Steps attributed to each path (the path that emitted the label).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CascadeCounters {
    pub big: usize,
    pub little: usize,
    pub dual: usize,
    pub distance: usize,
}

impl CascadeCounters {
    /// Steps resolved by a secondary path without waking the big model.
    pub fn secondary(&self) -> usize {
        self.little + self.dual + self.distance
    }

    pub fn total(&self) -> usize {
        self.big + self.secondary()
    }
}

/// One streaming session's registers and counters.
#[derive(Default)]
pub struct CascadeState {
    pub prev_label: Option<ActivityLabel>,
    pub prev_sample: Option<Sample>,
    pub counters: CascadeCounters,
    step_index: usize,
}

impl CascadeState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Advance one step: consult the secondary when a previous label exists,
/// wake the big model on a "changed" verdict (or always, under big-only),
/// then update both registers.
pub fn step(
    state: &mut CascadeState,
    sample: &Sample,
    models: &ModelBundle,
    config: &CascadeConfig,
) -> Result<(ActivityLabel, StepTrace)> {
    models.validate_for(config)?;
    let index = state.step_index;
    state.step_index += 1;

    let mut verdict = None;
    let (path, emitted) = match (state.prev_label, config) {
        // Empty register: only the big model can answer.
        (None, _) | (Some(_), CascadeConfig::BigOnly) => {
            let label = models.big.as_ref().unwrap().classify(sample)?;
            (PathTaken::Big, label)
        }
        (Some(prev_label), CascadeConfig::BigSixLittle) => {
            let v = models
                .littles
                .as_ref()
                .unwrap()
                .verdict(prev_label, sample)?;
            verdict = Some(v);
            match v {
                Verdict::Same => (PathTaken::Little(prev_label), prev_label),
                Verdict::Changed => {
                    let label = models.big.as_ref().unwrap().classify(sample)?;
                    (PathTaken::Big, label)
                }
            }
        }
        (Some(prev_label), CascadeConfig::BigDual) => {
            let prev_sample = state.prev_sample.as_ref().expect("set on first step");
            let v = models.dual.as_ref().unwrap().verdict(prev_sample, sample)?;
            verdict = Some(v);
            match v {
                Verdict::Same => (PathTaken::Dual, prev_label),
                Verdict::Changed => {
                    let label = models.big.as_ref().unwrap().classify(sample)?;
                    (PathTaken::Big, label)
                }
            }
        }
        (Some(prev_label), CascadeConfig::BigDistance { .. }) => {
            let prev_sample = state.prev_sample.as_ref().expect("set on first step");
            let v = models
                .distance
                .as_ref()
                .unwrap()
                .verdict(prev_sample, sample)?;
            verdict = Some(v);
            match v {
                Verdict::Same => (PathTaken::Distance, prev_label),
                Verdict::Changed => {
                    let label = models.big.as_ref().unwrap().classify(sample)?;
                    (PathTaken::Big, label)
                }
            }
        }
    };

    match path {
        PathTaken::Big => state.counters.big += 1,
        PathTaken::Little(_) => state.counters.little += 1,
        PathTaken::Dual => state.counters.dual += 1,
        PathTaken::Distance => state.counters.distance += 1,
    }
    state.prev_label = Some(emitted);
    state.prev_sample = Some(sample.clone());

    let trace = StepTrace {
        index,
        path,
        verdict,
        emitted,
    };
    Ok((emitted, trace))
}

/// Outcome of folding [`step`] over a stream from a fresh state.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub labels: Vec<ActivityLabel>,
    pub stats: CascadeCounters,
    pub traces: Vec<StepTrace>,
}

impl RunResult {
    /// Fraction of emitted labels matching the stream's own labels.
    pub fn accuracy_against_truth(&self, samples: &[Sample]) -> f64 {
        let hits = self
            .labels
            .iter()
            .zip(samples)
            .filter(|(label, sample)| **label == sample.label)
            .count();
        hits as f64 / samples.len() as f64
    }
}

/// Run a whole sample stream under one configuration.
pub fn run_sequence(
    samples: &[Sample],
    models: &ModelBundle,
    config: &CascadeConfig,
) -> Result<RunResult> {
    if samples.is_empty() {
        return Err(Error::Cascade("sample stream is empty".into()));
    }
    models.validate_for(config)?;
    let mut state = CascadeState::new();
    let mut labels = Vec::with_capacity(samples.len());
    let mut traces = Vec::with_capacity(samples.len());
    for sample in samples {
        let (label, trace) = step(&mut state, sample, models, config)?;
        labels.push(label);
        traces.push(trace);
    }
    Ok(RunResult {
        labels,
        stats: state.counters,
        traces,
    })
}

/// Write the trace log as JSON lines:
/// `{"index":0,"path":"big","verdict":null,"emitted":4,"truth":4}`.
pub fn write_trace_jsonl(
    traces: &[StepTrace],
    truths: &[Sample],
    mut out: impl Write,
) -> Result<()> {
    for (trace, sample) in traces.iter().zip(truths) {
        let verdict = match trace.verdict {
            Some(Verdict::Same) => "\"same\"",
            Some(Verdict::Changed) => "\"changed\"",
            None => "null",
        };
        writeln!(
            out,
            "{{\"index\":{},\"path\":\"{}\",\"verdict\":{},\"emitted\":{},\"truth\":{}}}",
            trace.index,
            trace.path.name(),
            verdict,
            trace.emitted.code(),
            sample.label.code()
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Quantized-model adapters
// ---------------------------------------------------------------------------

fn quantized_big_inputs(sample: &Sample) -> Vec<QuantizedTensor> {
    vec![
        sample.body_acc.to_quantized(),
        sample.body_gyro.to_quantized(),
        sample.total_acc.to_quantized(),
    ]
}

/// Stack two total-accelerometer windows into the quantized 384x2 pair input.
pub fn quantized_pair_input(prev: &Sample, current: &Sample) -> QuantizedTensor {
    let a = prev.total_acc.to_quantized();
    let b = current.total_acc.to_quantized();
    let mut data = Vec::with_capacity(a.data.len() * 2);
    for i in 0..a.data.len() {
        data.push(a.data[i]);
        data.push(b.data[i]);
    }
    QuantizedTensor {
        shape: vec![384, 2],
        data,
        qparams: a.qparams,
    }
}

/// The quantized six-class model as a [`PrimaryModel`].
pub struct QuantizedBig {
    graph: ModelGraph,
}

impl QuantizedBig {
    pub fn new(graph: ModelGraph) -> Result<Self> {
        if graph.kind != ModelKind::Big {
            return Err(Error::Cascade(format!(
                "expected a big model, got {}",
                graph.kind
            )));
        }
        graph.validate()?;
        Ok(Self { graph })
    }
}

impl PrimaryModel for QuantizedBig {
    fn classify(&self, sample: &Sample) -> Result<ActivityLabel> {
        let result = infer(&self.graph, &quantized_big_inputs(sample))?;
        ActivityLabel::from_index(result.class_index)
    }
}

/// The six quantized per-activity models as a [`LittleBank`].
///
/// Class index 1 means "same as the previous activity", class 0 "changed";
/// argmax ties break to the lower index, i.e. toward waking the big model.
pub struct QuantizedLittleBank {
    graphs: Vec<ModelGraph>,
}

impl QuantizedLittleBank {
    /// Takes the six little models in activity order I..VI.
    pub fn new(graphs: Vec<ModelGraph>) -> Result<Self> {
        if graphs.len() != 6 {
            return Err(Error::Cascade(format!(
                "need six little models, got {}",
                graphs.len()
            )));
        }
        for (i, graph) in graphs.iter().enumerate() {
            let expected = ActivityLabel::from_index(i).unwrap();
            match graph.kind {
                ModelKind::Little(target) if target == expected => graph.validate().map(|_| ())?,
                other => {
                    return Err(Error::Cascade(format!(
                        "slot {i} expects little({}), got {other}",
                        expected.code()
                    )))
                }
            }
        }
        Ok(Self { graphs })
    }
}

impl LittleBank for QuantizedLittleBank {
    fn verdict(&self, target: ActivityLabel, sample: &Sample) -> Result<Verdict> {
        let graph = &self.graphs[target.index()];
        let result = infer(graph, &[sample.total_acc.to_quantized()])?;
        Ok(if result.class_index == 1 {
            Verdict::Same
        } else {
            Verdict::Changed
        })
    }
}

/// The quantized change detector as a [`PairDetector`].
pub struct QuantizedDual {
    graph: ModelGraph,
}

impl QuantizedDual {
    pub fn new(graph: ModelGraph) -> Result<Self> {
        if graph.kind != ModelKind::Dual {
            return Err(Error::Cascade(format!(
                "expected a dual model, got {}",
                graph.kind
            )));
        }
        graph.validate()?;
        Ok(Self { graph })
    }
}

impl PairDetector for QuantizedDual {
    fn verdict(&self, prev: &Sample, current: &Sample) -> Result<Verdict> {
        let result = infer(&self.graph, &[quantized_pair_input(prev, current)])?;
        Ok(if result.class_index == 1 {
            Verdict::Same
        } else {
            Verdict::Changed
        })
    }
}

/// Distance trigger: wakes the big model when the distance between the
/// stretched total-accelerometer vectors strictly exceeds the threshold
/// (a boundary hit stays asleep).
pub struct DistanceTrigger {
    metric: DistanceMetric,
    threshold: f64,
}

impl DistanceTrigger {
    pub fn new(metric: DistanceMetric, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() || threshold <= 0.0 {
            return Err(Error::Cascade(format!(
                "distance threshold must be positive, got {threshold}"
            )));
        }
        Ok(Self { metric, threshold })
    }

    /// Build the trigger a `BigDistance` configuration describes.
    pub fn from_config(config: &CascadeConfig) -> Result<Self> {
        match config {
            CascadeConfig::BigDistance { metric, threshold } => {
                Self::new(metric.clone(), *threshold)
            }
            other => Err(Error::Cascade(format!(
                "{} configuration does not describe a distance trigger",
                other.name()
            ))),
        }
    }
}

impl PairDetector for DistanceTrigger {
    fn verdict(&self, prev: &Sample, current: &Sample) -> Result<Verdict> {
        let d = self
            .metric
            .distance(&prev.total_acc.stretched(), &current.total_acc.stretched())?;
        Ok(if d > self.threshold {
            Verdict::Changed
        } else {
            Verdict::Same
        })
    }
}
