//! Metric registry.
//!
//! Every metric implements [`Metric`] and is registered by name in a
//! [`MetricRegistry`]. The evaluation pipeline, scoring contexts and weight
//! files all refer to metrics by these names, so extra KPIs can be added by
//! registering another implementation.

pub mod detection;
pub mod identification;
pub mod tracking;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::association::{DetectionAssociation, TrackAssociation};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Detection, GroundTruthTrajectory, SensorPose, Track};

use identification::ConfusionDurations;

/// The three DTI functions a metric belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Detection,
    Tracking,
    Identification,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Detection, Component::Tracking, Component::Identification];

    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Detection => "detection",
            Component::Tracking => "tracking",
            Component::Identification => "identification",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a metric has no value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Undefined {
    NoAssociations,
    NoDetections,
    NoTracks,
    NoTargets,
    DegenerateRange,
    DegenerateTruth,
    NoVelocity,
    MissingTrueNegatives,
    ZeroDenominator(&'static str),
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undefined::NoAssociations => f.write_str("no associations with the true object"),
            Undefined::NoDetections => f.write_str("no detections"),
            Undefined::NoTracks => f.write_str("no tracks"),
            Undefined::NoTargets => f.write_str("no ground truth of the evaluated class"),
            Undefined::DegenerateRange => f.write_str("flight path has zero range extent"),
            Undefined::DegenerateTruth => f.write_str("true object has zero duration in the area of interest"),
            Undefined::NoVelocity => f.write_str("no associated sample with an obtainable velocity"),
            Undefined::MissingTrueNegatives => f.write_str("true negatives unavailable without negative ground truth"),
            Undefined::ZeroDenominator(what) => write!(f, "{what} is zero"),
        }
    }
}

pub type MetricResult = Result<f64, Undefined>;

/// Options that change metric definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricOptions {
    pub positive_label: String,
    /// Use the truth's whole duration in the window instead of its AoI
    /// presence as the completeness and longest-segment denominator.
    pub use_full_truth_duration: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions { positive_label: "uav".into(), use_full_truth_duration: false }
    }
}

/// Everything a metric may look at.
pub struct MetricInput<'a> {
    pub truths: &'a [GroundTruthTrajectory],
    pub detections: &'a [Detection],
    pub tracks: &'a [Track],
    pub sensor: SensorPose,
    pub window: Interval,
    pub detection_assoc: &'a DetectionAssociation,
    pub track_assoc: &'a TrackAssociation,
    pub options: MetricOptions,
    confusion: OnceLock<ConfusionDurations>,
}

impl<'a> MetricInput<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        truths: &'a [GroundTruthTrajectory],
        detections: &'a [Detection],
        tracks: &'a [Track],
        sensor: SensorPose,
        window: Interval,
        detection_assoc: &'a DetectionAssociation,
        track_assoc: &'a TrackAssociation,
        options: MetricOptions,
    ) -> Self {
        MetricInput {
            truths,
            detections,
            tracks,
            sensor,
            window,
            detection_assoc,
            track_assoc,
            options,
            confusion: OnceLock::new(),
        }
    }

    /// Whether truth `i` is of the evaluated (positive) class.
    pub fn is_target(&self, i: usize) -> bool {
        self.truths[i].class.as_str() == self.options.positive_label
    }

    /// Denominator time of truth `i` for completeness-style ratios.
    pub fn truth_time(&self, i: usize) -> IntervalSet {
        let gt = &self.truths[i];
        if self.options.use_full_truth_duration {
            let (a, b) = gt.span();
            IntervalSet::single(a, b).clip(self.window.start, self.window.end)
        } else {
            gt.aoi_presence.clone()
        }
    }

    pub fn confusion(&self) -> &ConfusionDurations {
        self.confusion.get_or_init(|| {
            identification::confusion_durations(
                self.truths,
                self.tracks,
                self.track_assoc,
                &self.options.positive_label,
            )
        })
    }
}

/// Result of evaluating one metric on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricOutcome {
    /// Trial-level value: the metric itself for global metrics, the mean over
    /// target truths for per-truth metrics.
    pub value: MetricResult,
    /// Per-truth values, for per-truth metrics.
    pub per_truth: Option<Vec<MetricResult>>,
}

pub trait Metric: Send + Sync {
    fn name(&self) -> &str;
    fn component(&self) -> Component;
    /// Unit of the raw value, for reports.
    fn unit(&self) -> &str;
    fn evaluate(&self, input: &MetricInput<'_>) -> MetricOutcome;
}

type PerTruthFn = fn(&MetricInput<'_>, usize) -> MetricResult;
type GlobalFn = fn(&MetricInput<'_>) -> MetricResult;

/// A metric computed per truth and averaged over target truths.
pub struct PerTruthMetric {
    pub name: &'static str,
    pub component: Component,
    pub unit: &'static str,
    pub compute: PerTruthFn,
}

impl Metric for PerTruthMetric {
    fn name(&self) -> &str {
        self.name
    }

    fn component(&self) -> Component {
        self.component
    }

    fn unit(&self) -> &str {
        self.unit
    }

    fn evaluate(&self, input: &MetricInput<'_>) -> MetricOutcome {
        let per_truth: Vec<MetricResult> = (0..input.truths.len()).map(|i| (self.compute)(input, i)).collect();
        let targets: Vec<&MetricResult> =
            per_truth.iter().enumerate().filter(|(i, _)| input.is_target(*i)).map(|(_, r)| r).collect();
        let value = if targets.is_empty() {
            Err(Undefined::NoTargets)
        } else {
            let defined: Vec<f64> = targets.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
            if defined.is_empty() {
                Err(targets[0].clone().unwrap_err())
            } else {
                Ok(defined.iter().sum::<f64>() / defined.len() as f64)
            }
        };
        MetricOutcome { value, per_truth: Some(per_truth) }
    }
}

/// A metric with a single trial-level value.
pub struct GlobalMetric {
    pub name: &'static str,
    pub component: Component,
    pub unit: &'static str,
    pub compute: GlobalFn,
}

impl Metric for GlobalMetric {
    fn name(&self) -> &str {
        self.name
    }

    fn component(&self) -> Component {
        self.component
    }

    fn unit(&self) -> &str {
        self.unit
    }

    fn evaluate(&self, input: &MetricInput<'_>) -> MetricOutcome {
        MetricOutcome { value: (self.compute)(input), per_truth: None }
    }
}

/// Metrics keyed by name, in registration order.
#[derive(Default)]
pub struct MetricRegistry {
    metrics: Vec<Box<dyn Metric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        MetricRegistry::default()
    }

    /// All detection, tracking and identification metrics.
    pub fn with_defaults() -> Self {
        let mut r = MetricRegistry::new();
        detection::register(&mut r);
        tracking::register(&mut r);
        identification::register(&mut r);
        r
    }

    /// Adds a metric, replacing any metric of the same name.
    pub fn register(&mut self, metric: Box<dyn Metric>) {
        match self.metrics.iter().position(|m| m.name() == metric.name()) {
            Some(i) => self.metrics[i] = metric,
            None => self.metrics.push(metric),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Metric> {
        self.metrics.iter().find(|m| m.name() == name).map(|m| m.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Metric> {
        self.metrics.iter().map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }
}

/// Metric names.
pub mod names {
    pub const LOCATION_ACCURACY_2D: &str = "location_accuracy_2d";
    pub const LOCATION_ACCURACY_3D: &str = "location_accuracy_3d";
    pub const RANGE_RATIO_NEAR: &str = "range_ratio_near";
    pub const RANGE_RATIO_FAR: &str = "range_ratio_far";
    pub const DETECTION_PRECISION: &str = "detection_precision";
    pub const DETECTION_IMMEDIATENESS: &str = "detection_immediateness";
    pub const TRACK_COMPLETENESS: &str = "track_completeness";
    pub const TRACK_CONTINUITY: &str = "track_continuity";
    pub const TRACK_AMBIGUITY: &str = "track_ambiguity";
    pub const TRACK_SPURIOUSNESS: &str = "track_spuriousness";
    pub const TRACK_POSITIONAL_ACCURACY_2D: &str = "track_positional_accuracy_2d";
    pub const TRACK_POSITIONAL_ACCURACY_3D: &str = "track_positional_accuracy_3d";
    pub const TRACK_VELOCITY_ACCURACY: &str = "track_velocity_accuracy";
    pub const LONGEST_TRACK_SEGMENT: &str = "longest_track_segment";
    pub const TRACKING_IMMEDIATENESS: &str = "tracking_immediateness";
    pub const F1: &str = "f1";
    pub const IDENTIFICATION_PRECISION: &str = "identification_precision";
    pub const POD: &str = "pod";
    pub const MAR: &str = "mar";
    pub const FAR: &str = "far";
}
