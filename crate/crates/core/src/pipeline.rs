//! The full evaluation chain from trial files to a report.

use std::path::Path;

use crate::association::{associate_detections, associate_tracks, DetectionAssociation, TrackAssociation};
use crate::error::EvalError;
use crate::geo::{clip_to_window_and_aoi, AreaOfInterest, ClippedTrial, EnuTrial};
use crate::ingest::{load_trial, AssociationParams, IdentificationParams, TrackingParams, TrialBundle, TrialPaths};
use crate::interval::Interval;
use crate::metrics::tracking::{minimal_association_subset, track_velocity_accuracy};
use crate::metrics::{MetricInput, MetricOptions, MetricOutcome, MetricRegistry};
use crate::report::{
    AggregationEcho, ConfigEcho, ConfusionEcho, Diagnostics, MetricEntry, Report, ScoredComponent, ScoredMetric,
    Scores, SubsetDiagnostic, ToolInfo, TrialSummary, TruthValue, SCHEMA_VERSION,
};
use crate::scoring::{aggregate, AggregateOptions, Annotation, ScoreInput, ScoringContext, WeightConfig};

/// How raw metrics become scores.
#[derive(Debug, Clone)]
pub struct ScoringSettings {
    /// Effective context (defaults merged with any user overrides).
    pub context: ScoringContext,
    pub weights: WeightConfig,
    pub aggregate: AggregateOptions,
}

impl Default for ScoringSettings {
    fn default() -> Self {
        ScoringSettings {
            context: ScoringContext::defaults(),
            weights: WeightConfig::default(),
            aggregate: AggregateOptions::default(),
        }
    }
}

/// Association parameters and metric options for one trial.
#[derive(Debug, Clone, Default)]
pub struct TrialParams {
    pub association: AssociationParams,
    pub identification: IdentificationParams,
    pub tracking: TrackingParams,
}

/// Intermediate products of one evaluation.
pub struct Evaluation {
    pub clipped: ClippedTrial,
    pub detection_assoc: DetectionAssociation,
    pub track_assoc: TrackAssociation,
    pub outcomes: Vec<(String, MetricOutcome)>,
    pub params: TrialParams,
}

impl Evaluation {
    pub fn input(&self) -> MetricInput<'_> {
        let t = &self.clipped.trial;
        MetricInput::new(
            &t.truths,
            &t.detections,
            &t.tracks,
            t.sensor,
            self.clipped.window,
            &self.detection_assoc,
            &self.track_assoc,
            MetricOptions {
                positive_label: self.params.identification.positive_label.clone(),
                use_full_truth_duration: self.params.tracking.use_full_truth_duration,
            },
        )
    }

    pub fn outcome(&self, name: &str) -> Option<&MetricOutcome> {
        self.outcomes.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }
}

/// Clips, associates and measures a trial that is already in ENU.
pub fn evaluate_enu(
    trial: EnuTrial,
    window: Interval,
    aoi: &AreaOfInterest,
    params: TrialParams,
    registry: &MetricRegistry,
) -> Result<Evaluation, EvalError> {
    let clipped = clip_to_window_and_aoi(trial, window, aoi)?;
    let t = &clipped.trial;
    let detection_assoc = associate_detections(&t.truths, &t.detections, params.association.gate_m);
    let track_assoc =
        associate_tracks(&t.truths, &t.tracks, params.association.gate_m, params.association.min_segment_s);
    let mut ev = Evaluation { clipped, detection_assoc, track_assoc, outcomes: Vec::new(), params };
    let outcomes = {
        let input = ev.input();
        registry.iter().map(|m| (m.name().to_string(), m.evaluate(&input))).collect()
    };
    ev.outcomes = outcomes;
    Ok(ev)
}

/// Runs the pipeline on a loaded trial. `scoring = None` skips
/// normalization and aggregation.
pub fn evaluate_bundle(
    bundle: &TrialBundle,
    registry: &MetricRegistry,
    scoring: Option<&ScoringSettings>,
) -> Result<Report, EvalError> {
    let cfg = &bundle.config;
    let invalid = |m: String| EvalError::Ingest(crate::error::IngestError::Invalid { path: "trial.json".into(), message: m });
    let window = cfg.window().map_err(invalid)?;
    let aoi = AreaOfInterest::from_spec(&cfg.aoi, &cfg.sensor)?;
    let params = TrialParams {
        association: cfg.association.clone().unwrap_or_default(),
        identification: cfg.identification.clone().unwrap_or_default(),
        tracking: cfg.tracking.clone().unwrap_or_default(),
    };
    let ev = evaluate_enu(bundle.to_enu()?, window, &aoi, params, registry)?;
    Ok(build_report(&ev, &cfg.trial_id, &cfg.dti_id, registry, scoring))
}

/// Loads the trial in `dir` and evaluates it.
pub fn evaluate_trial(
    dir: &Path,
    registry: &MetricRegistry,
    scoring: Option<&ScoringSettings>,
) -> Result<Report, EvalError> {
    let bundle = load_trial(&TrialPaths::in_dir(dir))?;
    evaluate_bundle(&bundle, registry, scoring)
}

fn diagnostics(ev: &Evaluation) -> Diagnostics {
    let t = &ev.clipped.trial;
    let input = ev.input();
    let mut d = Diagnostics::default();
    for (i, gt) in t.truths.iter().enumerate() {
        if let Ok(s) = minimal_association_subset(&ev.track_assoc, i, &t.tracks) {
            d.minimal_subsets.push(SubsetDiagnostic {
                object_id: gt.object_id.clone(),
                tracks: s.tracks.iter().map(|&j| t.tracks[j].track_id.clone()).collect(),
                optimal: s.optimal,
            });
        }
        d.velocity_samples_skipped += track_velocity_accuracy(gt, i, &t.tracks, &ev.track_assoc).1;
    }
    let c = input.confusion();
    d.confusion = Some(ConfusionEcho { tp_s: c.tp_s, fp_s: c.fp_s, fn_s: c.fn_s, tn_s: c.tn_s });
    d
}

/// Assembles the report for an evaluated trial.
pub fn build_report(
    ev: &Evaluation,
    trial_id: &str,
    dti_id: &str,
    registry: &MetricRegistry,
    scoring: Option<&ScoringSettings>,
) -> Report {
    let t = &ev.clipped.trial;
    let label = &ev.params.identification.positive_label;
    let mut metrics = Vec::new();
    let mut inputs = Vec::new();
    for (name, outcome) in &ev.outcomes {
        let m = registry.get(name).expect("outcome from registry");
        let per_truth = outcome.per_truth.as_ref().map(|v| {
            v.iter()
                .zip(&t.truths)
                .map(|(r, gt)| TruthValue {
                    object_id: gt.object_id.clone(),
                    value: r.as_ref().ok().copied(),
                    undefined: r.as_ref().err().map(ToString::to_string),
                })
                .collect()
        });
        metrics.push(MetricEntry {
            name: name.clone(),
            component: m.component(),
            unit: m.unit().to_string(),
            value: outcome.value.as_ref().ok().copied(),
            undefined: outcome.value.as_ref().err().map(ToString::to_string),
            per_truth,
        });
        if let Some(s) = scoring {
            let score = match &outcome.value {
                Ok(raw) => s.context.normalize(name, *raw).map_err(|e| e.to_string()),
                Err(u) => Err(u.to_string()),
            };
            inputs.push(ScoreInput {
                name: name.clone(),
                component: m.component(),
                raw: outcome.value.as_ref().ok().copied(),
                score,
            });
        }
    }

    let mut annotations: Vec<Annotation> = Vec::new();
    let scores = scoring.map(|s| {
        let tree = aggregate(&inputs, &s.weights, s.aggregate);
        annotations.extend(tree.annotations.iter().cloned());
        Scores {
            system: tree.system,
            components: tree
                .components
                .iter()
                .map(|c| ScoredComponent {
                    component: c.component,
                    score: c.score,
                    weight: c.weight,
                    metrics: c
                        .metrics
                        .iter()
                        .map(|m| ScoredMetric { name: m.name.clone(), score: m.score, weight: m.weight })
                        .collect(),
                })
                .collect(),
        }
    });
    if scoring.is_none() {
        annotations.extend(
            metrics
                .iter()
                .filter_map(|m| m.undefined.as_ref().map(|r| Annotation { target: m.name.clone(), reason: r.clone() })),
        );
    }

    Report {
        schema_version: SCHEMA_VERSION.into(),
        tool: ToolInfo::default(),
        trial: TrialSummary {
            trial_id: trial_id.into(),
            dti_id: dti_id.into(),
            window: [ev.clipped.window.start, ev.clipped.window.end],
            truths: t.truths.len(),
            targets: t.truths.iter().filter(|g| g.class.as_str() == label).count(),
            detections: t.detections.len(),
            tracks: t.tracks.len(),
            dropped_truths: ev
                .clipped
                .dropped
                .iter()
                .map(|d| Annotation { target: d.object_id.clone(), reason: d.reason.clone() })
                .collect(),
        },
        config: ConfigEcho {
            association: ev.params.association.clone(),
            identification: ev.params.identification.clone(),
            tracking: ev.params.tracking.clone(),
            scoring_context: scoring.map(|s| s.context.clone()),
            weights: scoring.map(|s| (&s.weights).into()),
            aggregation: scoring.map(|s| AggregationEcho::from(s.aggregate)),
        },
        metrics,
        scores,
        annotations,
        diagnostics: diagnostics(ev),
    }
}
