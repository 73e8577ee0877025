//! Validation suites: scenarios × models × seeded iterations, each evaluated
//! through the full pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dtieval_core::metrics::MetricRegistry;
use dtieval_core::pipeline::{evaluate_bundle, ScoringSettings};
use dtieval_core::report::Report;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::ClassifierRegistry;
use crate::dti::simulate;
use crate::error::{invalid, SimError};
use crate::model::DtiModelConfig;
use crate::rng::{derive_seed, DOMAIN_ITERATION};
use crate::scenario::ScenarioConfig;

/// Metrics reported by default.
pub const DEFAULT_SUITE_METRICS: [&str; 4] =
    ["range_ratio_far", "location_accuracy_2d", "track_completeness", "f1"];

/// A scenario or model given inline or as a path relative to the suite file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Path(String),
    Inline(Value),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub seed: u64,
    pub iterations: usize,
    pub scenarios: Vec<Entry>,
    pub models: Vec<Entry>,
    #[serde(default)]
    pub metrics: Vec<String>,
}

/// A suite with every entry resolved.
#[derive(Debug, Clone)]
pub struct Suite {
    pub seed: u64,
    pub iterations: usize,
    pub scenarios: Vec<ScenarioConfig>,
    pub models: Vec<DtiModelConfig>,
    pub metrics: Vec<String>,
}

fn read_json(path: &Path) -> Result<Value, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

impl Suite {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let file: SuiteFile =
            serde_json::from_value(read_json(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |e: &Entry| -> Result<(Value, Option<PathBuf>), SimError> {
            match e {
                Entry::Path(p) => {
                    let full = base.join(p);
                    Ok((read_json(&full)?, Some(full)))
                }
                Entry::Inline(v) => Ok((v.clone(), None)),
            }
        };
        let with_path = |p: &Option<PathBuf>, e: SimError| match (p, e) {
            (Some(p), SimError::ConfigInvalid(m)) => invalid(format!("{}: {m}", p.display())),
            (_, e) => e,
        };
        let scenarios = file
            .scenarios
            .iter()
            .map(|e| {
                let (v, p) = resolve(e)?;
                let s: ScenarioConfig = serde_json::from_value(v).map_err(|e| with_path(&p, invalid(e.to_string())))?;
                s.validate().map_err(|e| with_path(&p, e))?;
                Ok(s)
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let models = file
            .models
            .iter()
            .map(|e| {
                let (v, p) = resolve(e)?;
                DtiModelConfig::from_json(&v).map_err(|e| with_path(&p, e))
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let suite = Suite { seed: file.seed, iterations: file.iterations, scenarios, models, metrics: file.metrics };
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.scenarios.is_empty() || self.models.is_empty() {
            return Err(invalid("suite needs at least one scenario and one model"));
        }
        if self.iterations == 0 {
            return Err(invalid("suite iterations must be positive"));
        }
        Ok(())
    }

    pub fn reported_metrics(&self) -> Vec<String> {
        if self.metrics.is_empty() {
            DEFAULT_SUITE_METRICS.iter().map(|s| s.to_string()).collect()
        } else {
            self.metrics.clone()
        }
    }
}

/// Seed of iteration `i`. Every model in a suite sees the same seed for the
/// same iteration, so models are compared on identical truth.
pub fn iteration_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, DOMAIN_ITERATION, i as u64)
}

/// Mean over the iterations where a value was defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub mean: Option<f64>,
    pub defined: usize,
}

impl Mean {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        Mean { mean: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64), defined: v.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub model: String,
    pub iterations: usize,
    pub metrics: BTreeMap<String, Mean>,
    pub system_score: Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub metrics: BTreeMap<String, Mean>,
    pub system_score: Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub iterations: usize,
    pub cells: Vec<CellSummary>,
    pub models: Vec<ModelSummary>,
}

impl ValidationReport {
    pub fn cell(&self, scenario: &str, model: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.scenario == scenario && c.model == model)
    }

    pub fn model(&self, model: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == model)
    }
}

/// Per-iteration reports of one (scenario, model) cell.
pub struct CellRuns {
    pub scenario: String,
    pub model: String,
    pub reports: Vec<Report>,
}

/// Runs every (scenario, model, iteration) on up to `jobs` threads. Results
/// do not depend on `jobs`.
pub fn run_suite_reports(
    suite: &Suite,
    registry: &MetricRegistry,
    classifiers: &ClassifierRegistry,
    scoring: &ScoringSettings,
    jobs: usize,
) -> Result<Vec<CellRuns>, SimError> {
    suite.validate()?;
    let mut work = Vec::new();
    for (si, _) in suite.scenarios.iter().enumerate() {
        for (mi, _) in suite.models.iter().enumerate() {
            for it in 0..suite.iterations {
                work.push((si, mi, it));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let reports: Vec<Report> = pool.install(|| {
        work.par_iter()
            .map(|&(si, mi, it)| {
                let trial = simulate(&suite.scenarios[si], &suite.models[mi], classifiers, iteration_seed(suite.seed, it))?;
                Ok(evaluate_bundle(&trial.to_bundle()?, registry, Some(scoring))?)
            })
            .collect::<Result<Vec<_>, SimError>>()
    })?;
    let mut it = reports.into_iter();
    let mut out = Vec::new();
    for s in &suite.scenarios {
        for m in &suite.models {
            out.push(CellRuns {
                scenario: s.name.clone(),
                model: m.name.clone(),
                reports: it.by_ref().take(suite.iterations).collect(),
            });
        }
    }
    Ok(out)
}

pub fn run_validation_suite(
    suite: &Suite,
    registry: &MetricRegistry,
    classifiers: &ClassifierRegistry,
    scoring: &ScoringSettings,
    jobs: usize,
) -> Result<ValidationReport, SimError> {
    let runs = run_suite_reports(suite, registry, classifiers, scoring, jobs)?;
    let names = suite.reported_metrics();
    let summarize = |reports: &[&Report]| {
        let metrics = names.iter().map(|n| (n.clone(), Mean::of(reports.iter().map(|r| r.value(n))))).collect();
        (metrics, Mean::of(reports.iter().map(|r| r.system_score())))
    };
    let cells = runs
        .iter()
        .map(|c| {
            let refs: Vec<&Report> = c.reports.iter().collect();
            let (metrics, system_score) = summarize(&refs);
            CellSummary {
                scenario: c.scenario.clone(),
                model: c.model.clone(),
                iterations: c.reports.len(),
                metrics,
                system_score,
            }
        })
        .collect();
    let models = suite
        .models
        .iter()
        .map(|m| {
            let refs: Vec<&Report> =
                runs.iter().filter(|c| c.model == m.name).flat_map(|c| c.reports.iter()).collect();
            let (metrics, system_score) = summarize(&refs);
            ModelSummary { model: m.name.clone(), metrics, system_score }
        })
        .collect();
    Ok(ValidationReport { seed: suite.seed, iterations: suite.iterations, cells, models })
}
