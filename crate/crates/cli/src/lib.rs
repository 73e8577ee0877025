//! Commands behind the `dtieval` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use dtieval_core::error::EvalError;
use dtieval_core::ingest::{load_scoring_context, load_weights, write_trial, TrialPaths};
use dtieval_core::metrics::{Component, MetricRegistry};
use dtieval_core::pipeline::{evaluate_trial, ScoringSettings};
use dtieval_core::report::{Report, SCHEMA_VERSION};
use dtieval_core::scoring::{update_rating, AggregateOptions, RatingRecord, RatingTable, ScoringContext};
use dtieval_sim::classifier::ClassifierRegistry;
use dtieval_sim::suite::{run_validation_suite, Suite, ValidationReport};
use dtieval_sim::{simulate, DtiModelConfig, ScenarioConfig, SimError};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input data.
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_output(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub model: PathBuf,
    /// Overrides the scenario's `rng_seed`.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Writes `trial.json`, `ground_truth.jsonl`, `detections.jsonl` and
/// `tracks.jsonl` into `out`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<PathBuf, CliError> {
    let scenario = ScenarioConfig::load(&args.scenario)?;
    let model = DtiModelConfig::load(&args.model)?;
    let seed = args.seed.unwrap_or(scenario.rng_seed);
    let trial = simulate(&scenario, &model, &ClassifierRegistry::with_defaults(), seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Internal(format!("{}: {e}", args.out.display())))?;
    write_trial(&trial.to_bundle()?, &TrialPaths::in_dir(&args.out))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(args.out.clone())
}

/// Options shared by commands that score.
#[derive(Default)]
pub struct ScoringArgs {
    pub context: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub treat_missing_as_zero: bool,
}

impl ScoringArgs {
    pub fn settings(&self) -> Result<ScoringSettings, CliError> {
        let mut s = ScoringSettings::default();
        if let Some(p) = &self.context {
            s.context = ScoringContext::defaults().merged(&load_scoring_context(p)?);
        }
        if let Some(p) = &self.weights {
            s.weights = load_weights(p)?;
        }
        s.aggregate = AggregateOptions { treat_missing_as_zero: self.treat_missing_as_zero };
        Ok(s)
    }
}

pub struct EvaluateArgs {
    pub trial: PathBuf,
    pub scoring: ScoringArgs,
    pub no_normalize: bool,
    pub out: Option<PathBuf>,
    /// Rating store to append the result to.
    pub store: Option<PathBuf>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Report, CliError> {
    let settings = if args.no_normalize { None } else { Some(args.scoring.settings()?) };
    let report = evaluate_trial(&args.trial, &MetricRegistry::with_defaults(), settings.as_ref())?;
    emit(args.out.as_deref(), &report.to_json_pretty())?;
    if let Some(store) = &args.store {
        let record = rating_record(&report, Path::new("<evaluated trial>"))?;
        update_rating(store, &record).map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(report)
}

fn rating_record(report: &Report, path: &Path) -> Result<RatingRecord, CliError> {
    if report.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: schema_version {:?}, expected {SCHEMA_VERSION:?}",
            path.display(),
            report.schema_version
        )));
    }
    let scores = report
        .scores
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("{}: report has no scores (evaluated with --no-normalize)", path.display())))?;
    Ok(RatingRecord {
        dti_id: report.trial.dti_id.clone(),
        trial_id: report.trial.trial_id.clone(),
        system: scores.system,
        components: Component::ALL.into_iter().map(|c| (c, scores.component(c))).collect(),
    })
}

pub fn load_report(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    match value.get("schema_version").and_then(|v| v.as_str()) {
        Some(SCHEMA_VERSION) => {}
        other => {
            return Err(CliError::Input(format!(
                "{}: schema_version {other:?}, expected {SCHEMA_VERSION:?}",
                path.display()
            )))
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub struct CompareArgs {
    pub reports: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub store: Option<PathBuf>,
}

/// Ranks the DTI systems of the given reports. With a store, the reports are
/// appended to it and the table covers its whole history.
pub fn cmd_compare(args: &CompareArgs) -> Result<RatingTable, CliError> {
    if args.reports.is_empty() {
        return Err(CliError::Input("no reports given".into()));
    }
    let mut records = Vec::new();
    for p in &args.reports {
        records.push(rating_record(&load_report(p)?, p)?);
    }
    let table = match &args.store {
        Some(store) => {
            let mut table = RatingTable::default();
            for r in &records {
                table = update_rating(store, r).map_err(|e| CliError::Input(e.to_string()))?;
            }
            table
        }
        None => RatingTable::from_records(&records),
    };
    match &args.out {
        Some(p) => {
            let mut s = serde_json::to_string_pretty(&table).expect("table serializes");
            s.push('\n');
            write_output(p, &s)?;
        }
        None => print!("{}", format_table(&table)),
    }
    Ok(table)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

pub fn format_table(table: &RatingTable) -> String {
    let mut s = format!(
        "{:<5} {:<24} {:>6} {:>8} {:>10} {:>9} {:>15}\n",
        "rank", "dti_id", "trials", "system", "detection", "tracking", "identification"
    );
    for (k, r) in table.rows.iter().enumerate() {
        let c = |x: Component| cell(r.mean_components.get(&x).copied().flatten());
        s += &format!(
            "{:<5} {:<24} {:>6} {:>8} {:>10} {:>9} {:>15}\n",
            k + 1,
            r.dti_id,
            r.trials,
            cell(r.mean_system),
            c(Component::Detection),
            c(Component::Tracking),
            c(Component::Identification)
        );
    }
    s
}

pub struct ValidateArgs {
    pub suite: PathBuf,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub scoring: ScoringArgs,
    pub out: Option<PathBuf>,
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<ValidationReport, CliError> {
    let mut suite = Suite::load(&args.suite)?;
    if let Some(n) = args.iterations {
        suite.iterations = n;
    }
    if let Some(s) = args.seed {
        suite.seed = s;
    }
    let report = run_validation_suite(
        &suite,
        &MetricRegistry::with_defaults(),
        &ClassifierRegistry::with_defaults(),
        &args.scoring.settings()?,
        args.jobs,
    )?;
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    emit(args.out.as_deref(), &s)?;
    Ok(report)
}
