//! Trial report written as `report.json`.

use serde::{Deserialize, Serialize};

use crate::ingest::{AssociationParams, IdentificationParams, TrackingParams};
use crate::metrics::Component;
use crate::scoring::{AggregateOptions, Annotation, ScoringContext, WeightConfig};

pub const SCHEMA_VERSION: &str = "1.0";
pub const TOOL_NAME: &str = "dtieval";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo { name: TOOL_NAME.into(), version: TOOL_VERSION.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_id: String,
    pub dti_id: String,
    /// Evaluation window in seconds since the trial epoch.
    pub window: [f64; 2],
    pub truths: usize,
    pub targets: usize,
    pub detections: usize,
    pub tracks: usize,
    pub dropped_truths: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthValue {
    pub object_id: String,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub name: String,
    pub component: Component,
    pub unit: String,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_truth: Option<Vec<TruthValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDiagnostic {
    pub object_id: String,
    pub tracks: Vec<String>,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub minimal_subsets: Vec<SubsetDiagnostic>,
    /// Associated track samples without an obtainable velocity.
    pub velocity_samples_skipped: usize,
    pub confusion: Option<ConfusionEcho>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionEcho {
    pub tp_s: f64,
    pub fp_s: f64,
    pub fn_s: f64,
    pub tn_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMetric {
    pub name: String,
    pub score: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredComponent {
    pub component: Component,
    pub score: Option<f64>,
    pub weight: f64,
    pub metrics: Vec<ScoredMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub system: Option<f64>,
    pub components: Vec<ScoredComponent>,
}

impl Scores {
    pub fn component(&self, c: Component) -> Option<f64> {
        self.components.iter().find(|s| s.component == c).and_then(|s| s.score)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.components.iter().flat_map(|c| &c.metrics).find(|m| m.name == name).and_then(|m| m.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub association: AssociationParams,
    pub identification: IdentificationParams,
    pub tracking: TrackingParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scoring_context: Option<ScoringContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationEcho>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEcho {
    pub metric_weights: std::collections::BTreeMap<Component, std::collections::BTreeMap<String, f64>>,
    pub component_weights: std::collections::BTreeMap<Component, f64>,
}

impl From<&WeightConfig> for WeightEcho {
    fn from(w: &WeightConfig) -> Self {
        WeightEcho { metric_weights: w.metric_weights.clone(), component_weights: w.component_weights.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationEcho {
    pub treat_missing_as_zero: bool,
}

impl From<AggregateOptions> for AggregationEcho {
    fn from(o: AggregateOptions) -> Self {
        AggregationEcho { treat_missing_as_zero: o.treat_missing_as_zero }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub trial: TrialSummary,
    pub config: ConfigEcho,
    pub metrics: Vec<MetricEntry>,
    /// Absent when normalization is disabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    pub annotations: Vec<Annotation>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn metric(&self, name: &str) -> Option<&MetricEntry> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Trial-level raw value of a metric, if defined.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.metric(name).and_then(|m| m.value)
    }

    pub fn system_score(&self) -> Option<f64> {
        self.scores.as_ref().and_then(|s| s.system)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
