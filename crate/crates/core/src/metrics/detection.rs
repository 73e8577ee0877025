//! Detection metrics: location accuracy, range ratios, precision and
//! immediateness.

use super::{names, Component, GlobalMetric, MetricInput, MetricRegistry, MetricResult, PerTruthMetric, Undefined};
use crate::association::DetectionAssociation;
use crate::model::{distance_3d, Detection, GroundTruthTrajectory, SensorPose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Horizontal distance in the East-North plane.
    Planar,
    Spatial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeEnd {
    Near,
    Far,
}

/// RMS distance between truth `truth` and its associated detections.
pub fn location_accuracy(assoc: &DetectionAssociation, truth: usize, mode: Mode) -> MetricResult {
    let (sum, n) = assoc
        .detections_of(truth)
        .filter_map(|j| assoc.distance[j])
        .map(|d| match mode {
            Mode::Planar => d.d2,
            Mode::Spatial => d.d3,
        })
        .fold((0.0, 0usize), |(s, n), d| (s + d * d, n + 1));
    if n == 0 {
        return Err(Undefined::NoAssociations);
    }
    Ok((sum / n as f64).sqrt())
}

/// Minimum and maximum sensor distance of the truth over its AoI presence.
///
/// The trajectory is linear between samples, so the maximum is attained at a
/// piece endpoint and the minimum either there or at the orthogonal foot.
pub fn flight_path_extent(gt: &GroundTruthTrajectory, sensor: &SensorPose) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for iv in gt.aoi_presence.intervals() {
        let mut times = vec![iv.start];
        times.extend(gt.samples().iter().map(|s| s.t).filter(|&t| t > iv.start && t < iv.end));
        times.push(iv.end);
        let pts: Vec<Vec3> = times.iter().filter_map(|&t| gt.position_at(t)).collect();
        for p in &pts {
            let d = distance_3d(p, &sensor.position);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        for w in pts.windows(2) {
            let seg = w[1] - w[0];
            let len2 = seg.norm_squared();
            if len2 > 0.0 {
                let u = ((sensor.position - w[0]).dot(&seg) / len2).clamp(0.0, 1.0);
                lo = lo.min(distance_3d(&(w[0] + seg * u), &sensor.position));
            }
        }
    }
    lo.is_finite().then_some((lo, hi))
}

/// Range ratio near or far. Distances of detections are those of the truth
/// position at the detection time. Both ratios are 1 at best.
pub fn range_ratio(
    gt: &GroundTruthTrajectory,
    truth: usize,
    detections: &[Detection],
    assoc: &DetectionAssociation,
    sensor: &SensorPose,
    end: RangeEnd,
) -> MetricResult {
    let ranges: Vec<f64> = assoc
        .detections_of(truth)
        .filter_map(|j| gt.position_at(detections[j].t))
        .map(|p| distance_3d(&p, &sensor.position))
        .collect();
    if ranges.is_empty() {
        return Err(Undefined::NoAssociations);
    }
    let (min_t, max_t) = flight_path_extent(gt, sensor).ok_or(Undefined::DegenerateTruth)?;
    let extent = max_t - min_t;
    if !(extent > 1e-9) {
        return Err(Undefined::DegenerateRange);
    }
    let ratio = match end {
        RangeEnd::Near => (max_t - ranges.iter().copied().fold(f64::INFINITY, f64::min)) / extent,
        RangeEnd::Far => (ranges.iter().copied().fold(f64::NEG_INFINITY, f64::max) - min_t) / extent,
    };
    Ok(ratio.clamp(0.0, 1.0))
}

/// Fraction of detections associated with any truth.
pub fn detection_precision(assoc: &DetectionAssociation) -> MetricResult {
    let n = assoc.n_detections();
    if n == 0 {
        return Err(Undefined::NoDetections);
    }
    Ok(assoc.truth_of.iter().filter(|t| t.is_some()).count() as f64 / n as f64)
}

/// First associated detection time minus first AoI entry; positive = late.
pub fn detection_immediateness(
    gt: &GroundTruthTrajectory,
    truth: usize,
    detections: &[Detection],
    assoc: &DetectionAssociation,
) -> MetricResult {
    let entry = gt.aoi_presence.start().ok_or(Undefined::DegenerateTruth)?;
    let first = assoc
        .detections_of(truth)
        .map(|j| detections[j].t)
        .fold(f64::INFINITY, f64::min);
    if first.is_finite() {
        Ok(first - entry)
    } else {
        Err(Undefined::NoAssociations)
    }
}

pub(super) fn register(r: &mut MetricRegistry) {
    let c = Component::Detection;
    r.register(Box::new(PerTruthMetric {
        name: names::LOCATION_ACCURACY_2D,
        component: c,
        unit: "m",
        compute: |inp, i| location_accuracy(inp.detection_assoc, i, Mode::Planar),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::LOCATION_ACCURACY_3D,
        component: c,
        unit: "m",
        compute: |inp, i| location_accuracy(inp.detection_assoc, i, Mode::Spatial),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::RANGE_RATIO_NEAR,
        component: c,
        unit: "ratio",
        compute: |inp: &MetricInput<'_>, i| {
            range_ratio(&inp.truths[i], i, inp.detections, inp.detection_assoc, &inp.sensor, RangeEnd::Near)
        },
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::RANGE_RATIO_FAR,
        component: c,
        unit: "ratio",
        compute: |inp: &MetricInput<'_>, i| {
            range_ratio(&inp.truths[i], i, inp.detections, inp.detection_assoc, &inp.sensor, RangeEnd::Far)
        },
    }));
    r.register(Box::new(GlobalMetric {
        name: names::DETECTION_PRECISION,
        component: c,
        unit: "ratio",
        compute: |inp| detection_precision(inp.detection_assoc),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::DETECTION_IMMEDIATENESS,
        component: c,
        unit: "s",
        compute: |inp: &MetricInput<'_>, i| {
            detection_immediateness(&inp.truths[i], i, inp.detections, inp.detection_assoc)
        },
    }));
}
