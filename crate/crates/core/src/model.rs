//! Domain types shared by the evaluation pipeline.
//!
//! Positions are East-North-Up meters relative to the trial origin (the DTI
//! sensor), times are seconds since the trial epoch.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::interval::{IntervalSet, TimeStamp};

pub type Vec3 = Vector3<f64>;

/// Class of an airborne object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Uav,
    Bird,
    Other,
}

impl ObjectClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectClass::Uav => "uav",
            ObjectClass::Bird => "bird",
            ObjectClass::Other => "other",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uav" => Ok(ObjectClass::Uav),
            "bird" => Ok(ObjectClass::Bird),
            "other" => Ok(ObjectClass::Other),
            _ => Err(format!("unknown class {s:?} (expected uav|bird|other)")),
        }
    }
}

/// One time-stamped kinematic state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub t: TimeStamp,
    pub position: Vec3,
    pub velocity: Option<Vec3>,
}

impl StateSample {
    pub fn new(t: TimeStamp, position: Vec3) -> Self {
        StateSample { t, position, velocity: None }
    }

    pub fn with_velocity(mut self, v: Vec3) -> Self {
        self.velocity = Some(v);
        self
    }
}

/// True trajectory of one object.
#[derive(Debug, Clone)]
pub struct GroundTruthTrajectory {
    pub object_id: String,
    pub class: ObjectClass,
    samples: Vec<StateSample>,
    /// Times the object is inside the area of interest and the trial window.
    pub aoi_presence: IntervalSet,
}

impl GroundTruthTrajectory {
    /// Builds a trajectory whose presence defaults to its full sampled span.
    pub fn new(
        object_id: impl Into<String>,
        class: ObjectClass,
        samples: Vec<StateSample>,
    ) -> Result<Self, ModelError> {
        let object_id = object_id.into();
        if samples.len() < 2 {
            return Err(ModelError::TooFewSamples { id: object_id, needed: 2, got: samples.len() });
        }
        check_samples(&object_id, &samples)?;
        let presence = IntervalSet::single(samples[0].t, samples[samples.len() - 1].t);
        Ok(GroundTruthTrajectory { object_id, class, samples, aoi_presence: presence })
    }

    pub fn with_presence(mut self, presence: IntervalSet) -> Self {
        let (a, b) = self.span();
        self.aoi_presence = presence.clip(a, b);
        self
    }

    pub fn samples(&self) -> &[StateSample] {
        &self.samples
    }

    /// First and last sample time.
    pub fn span(&self) -> (TimeStamp, TimeStamp) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    pub fn covers(&self, t: TimeStamp) -> bool {
        let (a, b) = self.span();
        a <= t && t <= b
    }

    /// Interpolated position and velocity at `t`.
    pub fn sample_at(&self, t: TimeStamp) -> Result<(Vec3, Vec3), ModelError> {
        if !self.covers(t) {
            let (start, end) = self.span();
            return Err(ModelError::OutOfRange { id: self.object_id.clone(), t, start, end });
        }
        Ok(interpolate(&self.samples, t))
    }

    pub fn position_at(&self, t: TimeStamp) -> Option<Vec3> {
        self.covers(t).then(|| interpolate(&self.samples, t).0)
    }
}

/// A point detection reported by the DTI system.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub detection_id: String,
    pub t: TimeStamp,
    pub position: Vec3,
    pub sensor_id: String,
}

/// One reported state of a track, optionally carrying an identification label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSample {
    pub t: TimeStamp,
    pub position: Vec3,
    pub velocity: Option<Vec3>,
    pub ident: Option<String>,
    pub conf: Option<f64>,
}

impl TrackSample {
    pub fn new(t: TimeStamp, position: Vec3) -> Self {
        TrackSample { t, position, velocity: None, ident: None, conf: None }
    }

    pub fn with_velocity(mut self, v: Vec3) -> Self {
        self.velocity = Some(v);
        self
    }

    pub fn with_ident(mut self, label: impl Into<String>) -> Self {
        self.ident = Some(label.into());
        self
    }
}

/// A DTI track: a persistent id plus its time-ordered states.
#[derive(Debug, Clone)]
pub struct Track {
    pub track_id: String,
    samples: Vec<TrackSample>,
}

impl Track {
    pub fn new(track_id: impl Into<String>, samples: Vec<TrackSample>) -> Result<Self, ModelError> {
        let track_id = track_id.into();
        if samples.is_empty() {
            return Err(ModelError::TooFewSamples { id: track_id, needed: 1, got: 0 });
        }
        for w in samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(ModelError::NonMonotonicTime { id: track_id, t: w[1].t });
            }
        }
        if samples.iter().any(|s| !s.t.is_finite() || !finite(&s.position)) {
            return Err(ModelError::NonFinite { id: track_id });
        }
        Ok(Track { track_id, samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    /// Time range `[first, last]` of the track.
    pub fn range(&self) -> IntervalSet {
        IntervalSet::single(self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    /// Velocity at sample `k`: the reported one, else a finite difference of
    /// neighboring positions. `None` for single-sample tracks without a report.
    pub fn velocity_at(&self, k: usize) -> Option<Vec3> {
        self.samples[k].velocity.or_else(|| {
            (self.samples.len() >= 2).then(|| difference_velocity(&self.samples, k, |s| (s.t, s.position)))
        })
    }
}

/// Location of the DTI sensor in the trial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub position: Vec3,
}

impl Default for SensorPose {
    fn default() -> Self {
        SensorPose { position: Vec3::zeros() }
    }
}

/// Horizontal (EN-plane) distance.
pub fn distance_2d(a: &Vec3, b: &Vec3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub fn distance_3d(a: &Vec3, b: &Vec3) -> f64 {
    (a - b).norm()
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn check_samples(id: &str, samples: &[StateSample]) -> Result<(), ModelError> {
    for w in samples.windows(2) {
        if w[1].t <= w[0].t {
            return Err(ModelError::NonMonotonicTime { id: id.to_string(), t: w[1].t });
        }
    }
    if samples.iter().any(|s| !s.t.is_finite() || !finite(&s.position)) {
        return Err(ModelError::NonFinite { id: id.to_string() });
    }
    Ok(())
}

/// Central difference at interior samples, one-sided at the ends.
fn difference_velocity<S>(samples: &[S], k: usize, get: impl Fn(&S) -> (f64, Vec3)) -> Vec3 {
    let lo = k.saturating_sub(1);
    let hi = (k + 1).min(samples.len() - 1);
    let (t0, p0) = get(&samples[lo]);
    let (t1, p1) = get(&samples[hi]);
    (p1 - p0) / (t1 - t0)
}

fn sample_velocity(samples: &[StateSample], k: usize) -> Vec3 {
    samples[k]
        .velocity
        .unwrap_or_else(|| difference_velocity(samples, k, |s| (s.t, s.position)))
}

/// Piecewise-linear interpolation; `t` must lie within the sampled span.
fn interpolate(samples: &[StateSample], t: TimeStamp) -> (Vec3, Vec3) {
    let hi = samples.partition_point(|s| s.t < t);
    if hi < samples.len() && samples[hi].t == t {
        return (samples[hi].position, sample_velocity(samples, hi));
    }
    let lo = hi - 1;
    let (a, b) = (&samples[lo], &samples[hi]);
    let w = (t - a.t) / (b.t - a.t);
    let pos = a.position + (b.position - a.position) * w;
    let va = sample_velocity(samples, lo);
    let vb = sample_velocity(samples, hi);
    (pos, va + (vb - va) * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GroundTruthTrajectory {
        GroundTruthTrajectory::new(
            "a",
            ObjectClass::Uav,
            vec![
                StateSample::new(0.0, Vec3::new(0.0, 0.0, 0.0)),
                StateSample::new(10.0, Vec3::new(10.0, 0.0, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn interpolates_linearly() {
        let (p, _) = line().sample_at(5.0).unwrap();
        assert_eq!(p, Vec3::new(5.0, 0.0, 0.0));
    }

    #[test]
    fn exact_at_sample_times() {
        let (p, _) = line().sample_at(10.0).unwrap();
        assert_eq!(p, Vec3::new(10.0, 0.0, 0.0));
    }

    #[test]
    fn velocity_falls_back_to_differences() {
        let (_, v) = line().sample_at(3.0).unwrap();
        assert_eq!(v, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn reported_velocity_is_interpolated() {
        let gt = GroundTruthTrajectory::new(
            "a",
            ObjectClass::Uav,
            vec![
                StateSample::new(0.0, Vec3::zeros()).with_velocity(Vec3::new(0.0, 2.0, 0.0)),
                StateSample::new(4.0, Vec3::zeros()).with_velocity(Vec3::new(0.0, 6.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(gt.sample_at(1.0).unwrap().1, Vec3::new(0.0, 3.0, 0.0));
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(matches!(line().sample_at(10.5), Err(ModelError::OutOfRange { .. })));
        assert!(matches!(line().sample_at(-0.1), Err(ModelError::OutOfRange { .. })));
    }

    #[test]
    fn construction_contracts() {
        let one = vec![StateSample::new(0.0, Vec3::zeros())];
        assert!(GroundTruthTrajectory::new("x", ObjectClass::Uav, one).is_err());
        let back = vec![StateSample::new(1.0, Vec3::zeros()), StateSample::new(1.0, Vec3::zeros())];
        assert!(matches!(
            GroundTruthTrajectory::new("x", ObjectClass::Uav, back),
            Err(ModelError::NonMonotonicTime { .. })
        ));
        assert!(Track::new("t", vec![]).is_err());
    }

    #[test]
    fn track_velocity_derivation() {
        let tr = Track::new(
            "t",
            vec![
                TrackSample::new(0.0, Vec3::zeros()),
                TrackSample::new(1.0, Vec3::new(1.0, 0.0, 0.0)),
                TrackSample::new(3.0, Vec3::new(5.0, 0.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(tr.velocity_at(0), Some(Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(tr.velocity_at(1), Some(Vec3::new(5.0 / 3.0, 0.0, 0.0)));
        let single = Track::new("s", vec![TrackSample::new(0.0, Vec3::zeros())]).unwrap();
        assert_eq!(single.velocity_at(0), None);
    }

    #[test]
    fn distances() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(3.0, 4.0, 12.0);
        assert_eq!(distance_2d(&a, &b), 5.0);
        assert_eq!(distance_3d(&a, &b), 13.0);
    }
}
