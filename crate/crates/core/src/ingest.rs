//! Reading and writing trial files.
//!
//! A trial directory holds `trial.json` plus three JSON-lines files, one
//! record per line:
//!
//! ```text
//! ground_truth.jsonl {"object_id","t","lat","lon","alt_m","class","vx"?,"vy"?,"vz"?}
//! detections.jsonl   {"detection_id","t","lat","lon","alt_m","sensor_id"}
//! tracks.jsonl       {"track_id","t","lat","lon","alt_m","vx"?,"vy"?,"vz"?,"ident"?,"conf"?}
//! ```
//!
//! `t` is either a number of seconds since the trial epoch or an ISO-8601 UTC
//! timestamp string. Velocities are East/North/Up in m/s. Records of one object
//! may be interleaved with other objects but must strictly increase in time.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{EvalError, IngestError};
use crate::geo::{enu_to_geodetic, geodetic_to_enu, AoiSpec, EnuTrial, Geodetic};
use crate::interval::{Interval, TimeStamp};
use crate::model::{
    Detection, GroundTruthTrajectory, ObjectClass, SensorPose, StateSample, Track, TrackSample, Vec3,
};
use crate::scoring::{ScoringContext, WeightConfig};

pub const TRIAL_FILE: &str = "trial.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const TRACKS_FILE: &str = "tracks.jsonl";

/// A time given either as seconds since the trial epoch or as ISO-8601 UTC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Seconds(f64),
    Iso(String),
}

impl TimeValue {
    pub fn resolve(&self, epoch: &DateTime<Utc>) -> Result<TimeStamp, String> {
        match self {
            TimeValue::Seconds(s) if s.is_finite() => Ok(*s),
            TimeValue::Seconds(s) => Err(format!("non-finite time {s}")),
            TimeValue::Iso(text) => {
                let t = DateTime::parse_from_rfc3339(text).map_err(|e| format!("{text:?}: {e}"))?;
                let d = t.with_timezone(&Utc) - *epoch;
                Ok(d.num_nanoseconds().map(|n| n as f64 * 1e-9).unwrap_or(d.num_milliseconds() as f64 * 1e-3))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssociationParams {
    pub gate_m: f64,
    pub min_segment_s: f64,
}

impl Default for AssociationParams {
    fn default() -> Self {
        AssociationParams { gate_m: 50.0, min_segment_s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationParams {
    pub positive_label: String,
}

impl Default for IdentificationParams {
    fn default() -> Self {
        IdentificationParams { positive_label: "uav".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingParams {
    #[serde(default)]
    pub use_full_truth_duration: bool,
}

/// Contents of `trial.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub trial_id: String,
    pub dti_id: String,
    pub epoch: String,
    pub sensor: Geodetic,
    pub aoi: AoiSpec,
    pub time_window: [TimeValue; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub association: Option<AssociationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingParams>,
}

impl TrialConfig {
    pub fn epoch(&self) -> Result<DateTime<Utc>, String> {
        DateTime::parse_from_rfc3339(&self.epoch)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| format!("epoch {:?}: {e}", self.epoch))
    }

    pub fn window(&self) -> Result<Interval, String> {
        let epoch = self.epoch()?;
        let a = self.time_window[0].resolve(&epoch)?;
        let b = self.time_window[1].resolve(&epoch)?;
        Ok(Interval { start: a, end: b })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub t: TimeStamp,
    pub geo: Geodetic,
    pub velocity: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTruth {
    pub object_id: String,
    pub class: ObjectClass,
    pub samples: Vec<RawSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDetection {
    pub detection_id: String,
    pub t: TimeStamp,
    pub geo: Geodetic,
    pub sensor_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTrackSample {
    pub t: TimeStamp,
    pub geo: Geodetic,
    pub velocity: Option<[f64; 3]>,
    pub ident: Option<String>,
    pub conf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTrack {
    pub track_id: String,
    pub samples: Vec<RawTrackSample>,
}

/// Everything read from a trial directory, still in geodetic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBundle {
    pub config: TrialConfig,
    pub ground_truths: Vec<RawTruth>,
    pub detections: Vec<RawDetection>,
    pub tracks: Vec<RawTrack>,
}

/// File locations of one trial.
#[derive(Debug, Clone)]
pub struct TrialPaths {
    pub trial: PathBuf,
    pub ground_truth: PathBuf,
    pub detections: PathBuf,
    pub tracks: PathBuf,
}

impl TrialPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        TrialPaths {
            trial: dir.join(TRIAL_FILE),
            ground_truth: dir.join(GROUND_TRUTH_FILE),
            detections: dir.join(DETECTIONS_FILE),
            tracks: dir.join(TRACKS_FILE),
        }
    }
}

struct Row<'a> {
    path: &'a Path,
    line: usize,
    obj: Map<String, Value>,
}

impl<'a> Row<'a> {
    fn parse(path: &'a Path, line: usize, text: &str) -> Result<Self, IngestError> {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(obj)) => Ok(Row { path, line, obj }),
            Ok(_) => Err(parse_err(path, line, "<record>", "expected a JSON object")),
            Err(e) => Err(parse_err(path, line, "<record>", &e.to_string())),
        }
    }

    fn err(&self, field: &str, message: &str) -> IngestError {
        parse_err(self.path, self.line, field, message)
    }

    fn only(&self, allowed: &[&str]) -> Result<(), IngestError> {
        match self.obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.err(k, "unknown field")),
            None => Ok(()),
        }
    }

    fn string(&self, key: &str) -> Result<String, IngestError> {
        self.opt_string(key)?.ok_or_else(|| self.err(key, "missing"))
    }

    fn opt_string(&self, key: &str) -> Result<Option<String>, IngestError> {
        match self.obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn number(&self, key: &str) -> Result<f64, IngestError> {
        self.opt_number(key)?.ok_or_else(|| self.err(key, "missing"))
    }

    fn opt_number(&self, key: &str) -> Result<Option<f64>, IngestError> {
        match self.obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => n.as_f64().map(Some).ok_or_else(|| self.err(key, "not representable")),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn time(&self, key: &str, epoch: &DateTime<Utc>) -> Result<TimeStamp, IngestError> {
        let v = match self.obj.get(key) {
            None | Some(Value::Null) => return Err(self.err(key, "missing")),
            Some(Value::Number(n)) => TimeValue::Seconds(n.as_f64().unwrap_or(f64::NAN)),
            Some(Value::String(s)) => TimeValue::Iso(s.clone()),
            Some(_) => return Err(self.err(key, "expected seconds or an ISO-8601 string")),
        };
        v.resolve(epoch).map_err(|m| self.err(key, &m))
    }

    fn geodetic(&self) -> Result<Geodetic, IngestError> {
        let g = Geodetic::new(self.number("lat")?, self.number("lon")?, self.number("alt_m")?);
        if g.lat.abs() > 90.0 {
            return Err(self.err("lat", "outside [-90, 90]"));
        }
        if g.lon.abs() > 180.0 {
            return Err(self.err("lon", "outside [-180, 180]"));
        }
        Ok(g)
    }

    fn velocity(&self) -> Result<Option<[f64; 3]>, IngestError> {
        let parts = [self.opt_number("vx")?, self.opt_number("vy")?, self.opt_number("vz")?];
        match parts {
            [Some(x), Some(y), Some(z)] => Ok(Some([x, y, z])),
            [None, None, None] => Ok(None),
            _ => Err(self.err("vx", "velocity needs all of vx, vy, vz")),
        }
    }
}

fn parse_err(path: &Path, line: usize, field: &str, message: &str) -> IngestError {
    IngestError::Parse { path: path.to_path_buf(), line, field: field.to_string(), message: message.to_string() }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

fn rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

pub fn load_trial_config(path: &Path) -> Result<TrialConfig, IngestError> {
    let text = read(path)?;
    let cfg: TrialConfig = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        field: "<trial>".into(),
        message: e.to_string(),
    })?;
    let invalid = |message: String| IngestError::Invalid { path: path.to_path_buf(), message };
    cfg.window().map_err(invalid)?;
    if let Some(a) = &cfg.association {
        if !(a.gate_m > 0.0) || !(a.min_segment_s >= 0.0) {
            return Err(invalid(format!("association gate_m must be > 0 and min_segment_s >= 0, got {a:?}")));
        }
    }
    Ok(cfg)
}

pub fn parse_ground_truth(path: &Path, text: &str, epoch: &DateTime<Utc>) -> Result<Vec<RawTruth>, IngestError> {
    const FIELDS: &[&str] = &["object_id", "t", "lat", "lon", "alt_m", "class", "vx", "vy", "vz"];
    let mut out: Vec<RawTruth> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, text) in rows(text) {
        let row = Row::parse(path, line, text)?;
        row.only(FIELDS)?;
        let id = row.string("object_id")?;
        let t = row.time("t", epoch)?;
        let geo = row.geodetic()?;
        let class: ObjectClass = row.string("class")?.parse().map_err(|m: String| row.err("class", &m))?;
        let velocity = row.velocity()?;
        let k = *index.entry(id.clone()).or_insert_with(|| {
            out.push(RawTruth { object_id: id.clone(), class, samples: Vec::new() });
            out.len() - 1
        });
        let truth = &mut out[k];
        if truth.class != class {
            return Err(row.err("class", "class changes within one object"));
        }
        if truth.samples.last().is_some_and(|s| s.t >= t) {
            return Err(IngestError::NonMonotonicTime { path: path.to_path_buf(), line, id });
        }
        truth.samples.push(RawSample { t, geo, velocity });
    }
    Ok(out)
}

pub fn parse_detections(path: &Path, text: &str, epoch: &DateTime<Utc>) -> Result<Vec<RawDetection>, IngestError> {
    const FIELDS: &[&str] = &["detection_id", "t", "lat", "lon", "alt_m", "sensor_id"];
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, text) in rows(text) {
        let row = Row::parse(path, line, text)?;
        row.only(FIELDS)?;
        let detection_id = row.string("detection_id")?;
        let t = row.time("t", epoch)?;
        let geo = row.geodetic()?;
        let sensor_id = row.string("sensor_id")?;
        if !seen.insert(detection_id.clone()) {
            return Err(IngestError::DuplicateId { path: path.to_path_buf(), line, id: detection_id });
        }
        out.push(RawDetection { detection_id, t, geo, sensor_id });
    }
    Ok(out)
}

pub fn parse_tracks(path: &Path, text: &str, epoch: &DateTime<Utc>) -> Result<Vec<RawTrack>, IngestError> {
    const FIELDS: &[&str] = &["track_id", "t", "lat", "lon", "alt_m", "vx", "vy", "vz", "ident", "conf"];
    let mut out: Vec<RawTrack> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, text) in rows(text) {
        let row = Row::parse(path, line, text)?;
        row.only(FIELDS)?;
        let id = row.string("track_id")?;
        let t = row.time("t", epoch)?;
        let geo = row.geodetic()?;
        let velocity = row.velocity()?;
        let ident = row.opt_string("ident")?;
        let conf = row.opt_number("conf")?;
        if conf.is_some_and(|c| !(0.0..=1.0).contains(&c)) {
            return Err(row.err("conf", "outside [0, 1]"));
        }
        let k = *index.entry(id.clone()).or_insert_with(|| {
            out.push(RawTrack { track_id: id.clone(), samples: Vec::new() });
            out.len() - 1
        });
        let track = &mut out[k];
        if track.samples.last().is_some_and(|s| s.t >= t) {
            return Err(IngestError::NonMonotonicTime { path: path.to_path_buf(), line, id });
        }
        track.samples.push(RawTrackSample { t, geo, velocity, ident, conf });
    }
    Ok(out)
}

/// Reads a whole trial. A missing detections or tracks file is an error; an
/// empty one is not.
pub fn load_trial(paths: &TrialPaths) -> Result<TrialBundle, IngestError> {
    let config = load_trial_config(&paths.trial)?;
    let epoch = config
        .epoch()
        .map_err(|message| IngestError::Invalid { path: paths.trial.clone(), message })?;
    let ground_truths = parse_ground_truth(&paths.ground_truth, &read(&paths.ground_truth)?, &epoch)?;
    for gt in &ground_truths {
        if gt.samples.len() < 2 {
            return Err(IngestError::Invalid {
                path: paths.ground_truth.clone(),
                message: format!("object {:?} has fewer than 2 samples", gt.object_id),
            });
        }
    }
    let detections = parse_detections(&paths.detections, &read(&paths.detections)?, &epoch)?;
    let tracks = parse_tracks(&paths.tracks, &read(&paths.tracks)?, &epoch)?;
    Ok(TrialBundle { config, ground_truths, detections, tracks })
}

#[derive(Serialize)]
struct TruthLine<'a> {
    object_id: &'a str,
    t: f64,
    lat: f64,
    lon: f64,
    alt_m: f64,
    class: ObjectClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    vx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vz: Option<f64>,
}

#[derive(Serialize)]
struct DetectionLine<'a> {
    detection_id: &'a str,
    t: f64,
    lat: f64,
    lon: f64,
    alt_m: f64,
    sensor_id: &'a str,
}

#[derive(Serialize)]
struct TrackLine<'a> {
    track_id: &'a str,
    t: f64,
    lat: f64,
    lon: f64,
    alt_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    vx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ident: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conf: Option<f64>,
}

fn write_lines<T: Serialize>(path: &Path, lines: impl Iterator<Item = T>) -> Result<(), IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    let mut buf = Vec::new();
    for l in lines {
        serde_json::to_writer(&mut buf, &l).expect("serializable record");
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&buf).map_err(io)
}

/// Writes a trial in canonical form: truth and track records grouped per
/// object in first-appearance order, times as seconds since the epoch.
pub fn write_trial(bundle: &TrialBundle, paths: &TrialPaths) -> Result<(), IngestError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Io { path, source }
    };
    let mut cfg = serde_json::to_string_pretty(&bundle.config).expect("serializable config");
    cfg.push('\n');
    fs::write(&paths.trial, cfg).map_err(io(&paths.trial))?;

    write_lines(
        &paths.ground_truth,
        bundle.ground_truths.iter().flat_map(|gt| {
            gt.samples.iter().map(move |s| TruthLine {
                object_id: &gt.object_id,
                t: s.t,
                lat: s.geo.lat,
                lon: s.geo.lon,
                alt_m: s.geo.alt_m,
                class: gt.class,
                vx: s.velocity.map(|v| v[0]),
                vy: s.velocity.map(|v| v[1]),
                vz: s.velocity.map(|v| v[2]),
            })
        }),
    )?;
    write_lines(
        &paths.detections,
        bundle.detections.iter().map(|d| DetectionLine {
            detection_id: &d.detection_id,
            t: d.t,
            lat: d.geo.lat,
            lon: d.geo.lon,
            alt_m: d.geo.alt_m,
            sensor_id: &d.sensor_id,
        }),
    )?;
    write_lines(
        &paths.tracks,
        bundle.tracks.iter().flat_map(|tr| {
            tr.samples.iter().map(move |s| TrackLine {
                track_id: &tr.track_id,
                t: s.t,
                lat: s.geo.lat,
                lon: s.geo.lon,
                alt_m: s.geo.alt_m,
                vx: s.velocity.map(|v| v[0]),
                vy: s.velocity.map(|v| v[1]),
                vz: s.velocity.map(|v| v[2]),
                ident: s.ident.as_deref(),
                conf: s.conf,
            })
        }),
    )
}

fn vel(v: Option<[f64; 3]>) -> Option<Vec3> {
    v.map(|v| Vec3::new(v[0], v[1], v[2]))
}

impl TrialBundle {
    /// Projects every position into the ENU frame centered on the sensor.
    pub fn to_enu(&self) -> Result<EnuTrial, EvalError> {
        let origin = self.config.sensor;
        let enu = |g: &Geodetic| geodetic_to_enu(g, &origin);
        let truths = self
            .ground_truths
            .iter()
            .map(|gt| {
                let samples = gt
                    .samples
                    .iter()
                    .map(|s| Ok(StateSample { t: s.t, position: enu(&s.geo)?, velocity: vel(s.velocity) }))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                Ok(GroundTruthTrajectory::new(gt.object_id.clone(), gt.class, samples)?)
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let detections = self
            .detections
            .iter()
            .map(|d| {
                Ok(Detection {
                    detection_id: d.detection_id.clone(),
                    t: d.t,
                    position: enu(&d.geo)?,
                    sensor_id: d.sensor_id.clone(),
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let tracks = self
            .tracks
            .iter()
            .map(|tr| {
                let samples = tr
                    .samples
                    .iter()
                    .map(|s| {
                        Ok(TrackSample {
                            t: s.t,
                            position: enu(&s.geo)?,
                            velocity: vel(s.velocity),
                            ident: s.ident.clone(),
                            conf: s.conf,
                        })
                    })
                    .collect::<Result<Vec<_>, EvalError>>()?;
                Ok(Track::new(tr.track_id.clone(), samples)?)
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(EnuTrial { truths, detections, tracks, sensor: SensorPose::default() })
    }
}

/// Geodetic position of an ENU point relative to `origin`.
pub fn to_geodetic(p: &Vec3, origin: &Geodetic) -> Geodetic {
    enu_to_geodetic(p, origin).expect("origin validated by caller")
}

pub fn load_weights(path: &Path) -> Result<WeightConfig, EvalError> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| parse_err(path, e.line(), "<weights>", &e.to_string()))?;
    WeightConfig::from_json(&value).map_err(|e| match e {
        crate::error::ScoringError::Malformed(m) => EvalError::Ingest(IngestError::Invalid { path: path.into(), message: m }),
        other => EvalError::Scoring(other),
    })
}

pub fn load_scoring_context(path: &Path) -> Result<ScoringContext, EvalError> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| parse_err(path, e.line(), "<scoring_context>", &e.to_string()))?;
    ScoringContext::from_json(&value).map_err(|e| match e {
        crate::error::ScoringError::Malformed(m) => EvalError::Ingest(IngestError::Invalid { path: path.into(), message: m }),
        other => EvalError::Scoring(other),
    })
}
