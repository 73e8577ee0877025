//! Normalization, weighted aggregation and the rating store.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ScoringError;
use crate::metrics::{names, Component};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Anchors mapping one metric's raw value onto [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextEntry {
    pub orientation: Orientation,
    pub worst: f64,
    pub best: f64,
    #[serde(default = "yes")]
    pub clamp: bool,
}

fn yes() -> bool {
    true
}

impl ContextEntry {
    pub fn lower_better(worst: f64, best: f64) -> Self {
        ContextEntry { orientation: Orientation::LowerBetter, worst, best, clamp: true }
    }

    pub fn higher_better(worst: f64, best: f64) -> Self {
        ContextEntry { orientation: Orientation::HigherBetter, worst, best, clamp: true }
    }

    fn validate(&self, metric: &str) -> Result<(), ScoringError> {
        let ordered = match self.orientation {
            Orientation::HigherBetter => self.best > self.worst,
            Orientation::LowerBetter => self.best < self.worst,
        };
        if self.worst.is_finite() && self.best.is_finite() && ordered {
            Ok(())
        } else {
            Err(ScoringError::InvalidAnchors(metric.to_string()))
        }
    }
}

/// Linear map taking `worst` to 0 and `best` to 1, clamped unless disabled.
pub fn normalize_metric(raw: f64, ctx: &ContextEntry) -> f64 {
    let s = (raw - ctx.worst) / (ctx.best - ctx.worst);
    if ctx.clamp {
        s.clamp(0.0, 1.0)
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoringContext {
    pub metrics: BTreeMap<String, ContextEntry>,
}

impl ScoringContext {
    /// Shipped defaults for every built-in metric. These are starting points,
    /// not operational requirements, and are meant to be overridden.
    pub fn defaults() -> Self {
        let lb = ContextEntry::lower_better;
        let hb = ContextEntry::higher_better;
        let entries = [
            (names::LOCATION_ACCURACY_2D, lb(100.0, 0.0)),
            (names::LOCATION_ACCURACY_3D, lb(100.0, 0.0)),
            (names::RANGE_RATIO_NEAR, hb(0.0, 1.0)),
            (names::RANGE_RATIO_FAR, hb(0.0, 1.0)),
            (names::DETECTION_PRECISION, hb(0.0, 1.0)),
            (names::DETECTION_IMMEDIATENESS, lb(60.0, 0.0)),
            (names::TRACK_COMPLETENESS, hb(0.0, 1.0)),
            (names::TRACK_CONTINUITY, lb(20.0, 0.0)),
            (names::TRACK_AMBIGUITY, lb(3.0, 1.0)),
            (names::TRACK_SPURIOUSNESS, lb(1.0, 0.0)),
            (names::TRACK_POSITIONAL_ACCURACY_2D, lb(100.0, 0.0)),
            (names::TRACK_POSITIONAL_ACCURACY_3D, lb(100.0, 0.0)),
            (names::TRACK_VELOCITY_ACCURACY, lb(20.0, 0.0)),
            (names::LONGEST_TRACK_SEGMENT, hb(0.0, 1.0)),
            (names::TRACKING_IMMEDIATENESS, lb(60.0, 0.0)),
            (names::F1, hb(0.0, 1.0)),
            (names::IDENTIFICATION_PRECISION, hb(0.0, 1.0)),
            (names::POD, hb(0.0, 1.0)),
            (names::MAR, lb(1.0, 0.0)),
            (names::FAR, lb(1.0, 0.0)),
        ];
        ScoringContext { metrics: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    /// Parses `{"metrics": {name: {orientation, worst, best, clamp?}}}`.
    pub fn from_json(value: &Value) -> Result<Self, ScoringError> {
        let ctx: ScoringContext = serde_json::from_value(value.clone())
            .map_err(|e| ScoringError::Malformed(format!("scoring context: {e}")))?;
        for (name, entry) in &ctx.metrics {
            entry.validate(name)?;
        }
        Ok(ctx)
    }

    /// `self` with every entry of `other` replacing the same-named one.
    pub fn merged(mut self, other: &ScoringContext) -> Self {
        for (k, v) in &other.metrics {
            self.metrics.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn get(&self, metric: &str) -> Option<&ContextEntry> {
        self.metrics.get(metric)
    }

    pub fn normalize(&self, metric: &str, raw: f64) -> Result<f64, ScoringError> {
        let entry = self.get(metric).ok_or_else(|| ScoringError::MissingContext(metric.to_string()))?;
        Ok(normalize_metric(raw, entry))
    }
}

/// Metric and component weights. Metrics or components without an entry get
/// weight 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct WeightConfig {
    pub metric_weights: BTreeMap<Component, BTreeMap<String, f64>>,
    pub component_weights: BTreeMap<Component, f64>,
    /// Copies of the configured weights scaled to sum to 1 per level.
    pub normalized_metric_weights: BTreeMap<Component, BTreeMap<String, f64>>,
    pub normalized_component_weights: BTreeMap<Component, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    #[serde(default)]
    metric_weights: BTreeMap<Component, BTreeMap<String, f64>>,
    #[serde(default)]
    component_weights: BTreeMap<Component, f64>,
}

fn normalized<K: Ord + Clone + std::fmt::Debug>(
    level: &str,
    w: &BTreeMap<K, f64>,
) -> Result<BTreeMap<K, f64>, ScoringError> {
    for (k, v) in w {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(ScoringError::NegativeWeight { key: format!("{k:?}"), value: *v });
        }
    }
    let total: f64 = w.values().sum();
    if w.is_empty() {
        return Ok(BTreeMap::new());
    }
    if total <= 0.0 {
        return Err(ScoringError::AllZeroWeights(level.to_string()));
    }
    Ok(w.iter().map(|(k, v)| (k.clone(), v / total)).collect())
}

impl WeightConfig {
    pub fn new(
        metric_weights: BTreeMap<Component, BTreeMap<String, f64>>,
        component_weights: BTreeMap<Component, f64>,
    ) -> Result<Self, ScoringError> {
        let mut normalized_metric_weights = BTreeMap::new();
        for (c, w) in &metric_weights {
            let n = normalized(c.as_str(), w).map_err(|e| match e {
                ScoringError::NegativeWeight { key, value } => {
                    ScoringError::NegativeWeight { key: format!("{c}.{}", key.trim_matches('"')), value }
                }
                other => other,
            })?;
            normalized_metric_weights.insert(*c, n);
        }
        let normalized_component_weights = normalized("components", &component_weights)?;
        Ok(WeightConfig { metric_weights, component_weights, normalized_metric_weights, normalized_component_weights })
    }

    /// Parses `{"metric_weights": {component: {metric: w}}, "component_weights": {component: w}}`.
    pub fn from_json(value: &Value) -> Result<Self, ScoringError> {
        let raw: RawWeights =
            serde_json::from_value(value.clone()).map_err(|e| ScoringError::Malformed(format!("weights: {e}")))?;
        WeightConfig::new(raw.metric_weights, raw.component_weights)
    }

    pub fn metric_weight(&self, component: Component, metric: &str) -> f64 {
        self.metric_weights.get(&component).and_then(|m| m.get(metric)).copied().unwrap_or(1.0)
    }

    pub fn component_weight(&self, component: Component) -> f64 {
        self.component_weights.get(&component).copied().unwrap_or(1.0)
    }
}

/// One metric entering aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreInput {
    pub name: String,
    pub component: Component,
    pub raw: Option<f64>,
    /// Normalized score, or why there is none.
    pub score: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScore {
    pub name: String,
    pub raw: Option<f64>,
    pub score: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentScore {
    pub component: Component,
    pub score: Option<f64>,
    pub weight: f64,
    pub metrics: Vec<MetricScore>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub target: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTree {
    pub system: Option<f64>,
    pub components: Vec<ComponentScore>,
    pub annotations: Vec<Annotation>,
}

impl ScoreTree {
    pub fn component(&self, c: Component) -> Option<&ComponentScore> {
        self.components.iter().find(|s| s.component == c)
    }

    pub fn metric(&self, name: &str) -> Option<&MetricScore> {
        self.components.iter().flat_map(|c| &c.metrics).find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AggregateOptions {
    /// Score absent metrics as 0 instead of dropping them.
    pub treat_missing_as_zero: bool,
}

fn weighted_mean(items: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (w, s) in items {
        num += w * s;
        den += w;
    }
    (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
}

/// Weighted means per component, then across components. Absent metrics and
/// components drop out and the remaining weights are renormalized.
pub fn aggregate(inputs: &[ScoreInput], weights: &WeightConfig, opts: AggregateOptions) -> ScoreTree {
    let mut annotations = Vec::new();
    let mut components = Vec::new();
    for c in Component::ALL {
        let mut metrics = Vec::new();
        for inp in inputs.iter().filter(|m| m.component == c) {
            let score = match &inp.score {
                Ok(s) => Some(*s),
                Err(reason) => {
                    annotations.push(Annotation { target: inp.name.clone(), reason: reason.clone() });
                    opts.treat_missing_as_zero.then_some(0.0)
                }
            };
            metrics.push(MetricScore {
                name: inp.name.clone(),
                raw: inp.raw,
                score,
                weight: weights.metric_weight(c, &inp.name),
            });
        }
        if metrics.is_empty() {
            continue;
        }
        let score = weighted_mean(metrics.iter().filter_map(|m| m.score.map(|s| (m.weight, s))));
        if score.is_none() {
            let reason = if metrics.iter().any(|m| m.score.is_some()) {
                "all present metrics have zero weight"
            } else {
                "no metric of this component could be computed"
            };
            annotations.push(Annotation { target: c.as_str().to_string(), reason: reason.into() });
        }
        components.push(ComponentScore { component: c, score, weight: weights.component_weight(c), metrics });
    }
    let system = weighted_mean(components.iter().filter_map(|c| c.score.map(|s| (c.weight, s))));
    if system.is_none() {
        annotations.push(Annotation { target: "system".into(), reason: "no component score available".into() });
    }
    ScoreTree { system, components, annotations }
}

/// One line of `ratings.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingRecord {
    pub dti_id: String,
    pub trial_id: String,
    pub system: Option<f64>,
    #[serde(default)]
    pub components: BTreeMap<Component, Option<f64>>,
}

impl RatingRecord {
    pub fn from_tree(dti_id: &str, trial_id: &str, tree: &ScoreTree) -> Self {
        RatingRecord {
            dti_id: dti_id.into(),
            trial_id: trial_id.into(),
            system: tree.system,
            components: tree.components.iter().map(|c| (c.component, c.score)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingRow {
    pub dti_id: String,
    pub trials: usize,
    pub mean_system: Option<f64>,
    pub mean_components: BTreeMap<Component, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RatingTable {
    pub rows: Vec<RatingRow>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl RatingTable {
    /// Rows ordered by mean system score (descending, missing last), then id.
    pub fn from_records(records: &[RatingRecord]) -> Self {
        let mut by_id: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
        for r in records {
            by_id.entry(&r.dti_id).or_default().push(r);
        }
        let mut rows: Vec<RatingRow> = by_id
            .into_iter()
            .map(|(id, rs)| RatingRow {
                dti_id: id.to_string(),
                trials: rs.len(),
                mean_system: mean(rs.iter().map(|r| r.system)),
                mean_components: Component::ALL
                    .into_iter()
                    .map(|c| (c, mean(rs.iter().map(|r| r.components.get(&c).copied().flatten()))))
                    .collect(),
            })
            .collect();
        rows.sort_by(|a, b| {
            let key = |r: &RatingRow| r.mean_system.unwrap_or(f64::NEG_INFINITY);
            key(b).total_cmp(&key(a)).then_with(|| a.dti_id.cmp(&b.dti_id))
        });
        RatingTable { rows }
    }
}

/// Reads every complete record. A final line without a newline is an
/// in-progress append and is skipped.
pub fn read_ratings(store: &Path) -> Result<Vec<RatingRecord>, ScoringError> {
    let text = match std::fs::read_to_string(store) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ScoringError::Io(format!("{}: {e}", store.display()))),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out = Vec::new();
    for (n, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(line)
            .map_err(|e| ScoringError::StoreCorrupt { line: n + 1, message: e.to_string() })?;
        out.push(r);
    }
    Ok(out)
}

/// Appends one record to the store and returns the updated table.
pub fn update_rating(store: &Path, record: &RatingRecord) -> Result<RatingTable, ScoringError> {
    let mut records = read_ratings(store)?;
    let mut line = serde_json::to_string(record).map_err(|e| ScoringError::Io(e.to_string()))?;
    line.push('\n');
    let io = |e: std::io::Error| ScoringError::Io(format!("{}: {e}", store.display()));
    let mut f = OpenOptions::new().create(true).append(true).open(store).map_err(io)?;
    f.write_all(line.as_bytes()).map_err(io)?;
    records.push(record.clone());
    Ok(RatingTable::from_records(&records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn input(name: &str, c: Component, s: Result<f64, &str>) -> ScoreInput {
        ScoreInput { name: name.into(), component: c, raw: None, score: s.map_err(String::from) }
    }

    #[test]
    fn normalization_anchors() {
        let lb = ContextEntry::lower_better(100.0, 0.0);
        assert_eq!(normalize_metric(0.0, &lb), 1.0);
        assert_eq!(normalize_metric(100.0, &lb), 0.0);
        assert_eq!(normalize_metric(25.0, &lb), 0.75);
        assert_eq!(normalize_metric(250.0, &lb), 0.0);
        let loose = ContextEntry { clamp: false, ..lb };
        assert_eq!(normalize_metric(200.0, &loose), -1.0);
    }

    #[test]
    fn context_validation() {
        let bad = json!({"metrics": {"x": {"orientation": "lower_better", "worst": 0, "best": 10}}});
        assert!(matches!(ScoringContext::from_json(&bad), Err(ScoringError::InvalidAnchors(_))));
        let same = json!({"metrics": {"x": {"orientation": "higher_better", "worst": 1, "best": 1}}});
        assert!(ScoringContext::from_json(&same).is_err());
        let ok = json!({"metrics": {"x": {"orientation": "higher_better", "worst": 0, "best": 2}}});
        let ctx = ScoringContext::from_json(&ok).unwrap();
        assert_eq!(ctx.normalize("x", 1.0).unwrap(), 0.5);
        assert!(matches!(ctx.normalize("y", 1.0), Err(ScoringError::MissingContext(_))));
        assert!(ScoringContext::from_json(&json!({"metric": {}})).is_err());
    }

    #[test]
    fn defaults_cover_registry() {
        let ctx = ScoringContext::defaults();
        for m in crate::metrics::MetricRegistry::with_defaults().names() {
            assert!(ctx.get(m).is_some(), "{m}");
        }
    }

    #[test]
    fn weight_normalization() {
        let w = WeightConfig::from_json(&json!({"component_weights": {"detection": 1, "tracking": 1, "identification": 1}}))
            .unwrap();
        for v in w.normalized_component_weights.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let w = WeightConfig::from_json(&json!({"component_weights": {"detection": 2, "tracking": 1, "identification": 1}}))
            .unwrap();
        assert_eq!(w.normalized_component_weights[&Component::Detection], 0.5);
        assert_eq!(w.normalized_component_weights[&Component::Tracking], 0.25);
        let zero = WeightConfig::from_json(&json!({"metric_weights": {"detection": {"a": 0, "b": 0}}}));
        assert!(matches!(zero, Err(ScoringError::AllZeroWeights(_))));
        let neg = WeightConfig::from_json(&json!({"component_weights": {"detection": -1}}));
        assert!(matches!(neg, Err(ScoringError::NegativeWeight { .. })));
        assert!(WeightConfig::from_json(&json!({"component_weights": {"radar": 1}})).is_err());
    }

    #[test]
    fn weighted_component_mean() {
        let w = WeightConfig::from_json(&json!({"metric_weights": {"detection": {"a": 2, "b": 1}}})).unwrap();
        let t = aggregate(
            &[input("a", Component::Detection, Ok(0.8)), input("b", Component::Detection, Ok(0.4))],
            &w,
            AggregateOptions::default(),
        );
        let d = t.component(Component::Detection).unwrap().score.unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.system, Some(d));
    }

    #[test]
    fn absent_metric_renormalizes() {
        // a w1 0.9, b w3 absent, c w1 0.5 → (0.9 + 0.5) / 2 = 0.7.
        // tracking 0.4 with component weight 3 → system (0.7 + 1.2) / 4 = 0.475.
        let w = WeightConfig::from_json(&json!({
            "metric_weights": {"detection": {"a": 1, "b": 3, "c": 1}},
            "component_weights": {"detection": 1, "tracking": 3}
        }))
        .unwrap();
        let inputs = [
            input("a", Component::Detection, Ok(0.9)),
            input("b", Component::Detection, Err("no detections")),
            input("c", Component::Detection, Ok(0.5)),
            input("t", Component::Tracking, Ok(0.4)),
        ];
        let t = aggregate(&inputs, &w, AggregateOptions::default());
        assert!((t.component(Component::Detection).unwrap().score.unwrap() - 0.7).abs() < 1e-12);
        assert!((t.system.unwrap() - 0.475).abs() < 1e-12);
        assert_eq!(t.annotations, vec![Annotation { target: "b".into(), reason: "no detections".into() }]);

        let z = aggregate(&inputs, &w, AggregateOptions { treat_missing_as_zero: true });
        assert!((z.component(Component::Detection).unwrap().score.unwrap() - 1.4 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_component_is_annotated() {
        let t = aggregate(
            &[input("a", Component::Detection, Ok(1.0)), input("f", Component::Identification, Err("x"))],
            &WeightConfig::default(),
            AggregateOptions::default(),
        );
        assert_eq!(t.system, Some(1.0));
        assert_eq!(t.component(Component::Identification).unwrap().score, None);
        assert!(t.annotations.iter().any(|a| a.target == "identification"));
    }

    #[test]
    fn rating_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("ratings.jsonl");
        let rec = |id: &str, s: f64| RatingRecord {
            dti_id: id.into(),
            trial_id: "t".into(),
            system: Some(s),
            components: BTreeMap::new(),
        };
        let t = update_rating(&store, &rec("b", 0.4)).unwrap();
        assert_eq!(t.rows.len(), 1);
        let t = update_rating(&store, &rec("b", 0.6)).unwrap();
        assert!((t.rows[0].mean_system.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(t.rows[0].trials, 2);
        let t = update_rating(&store, &rec("a", 0.5)).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.dti_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);

        // An unterminated final line is an append in progress.
        let mut f = OpenOptions::new().append(true).open(&store).unwrap();
        f.write_all(b"{\"dti_id\":").unwrap();
        assert_eq!(read_ratings(&store).unwrap().len(), 3);
        f.write_all(b"1}\n").unwrap();
        assert!(matches!(read_ratings(&store), Err(ScoringError::StoreCorrupt { line: 4, .. })));
    }
}
