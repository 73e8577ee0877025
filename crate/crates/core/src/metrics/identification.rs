//! Identification metrics from duration-based confusion counts.
//!
//! Identification is reported per track sample. A track is "identified
//! positive" over each maximal run of samples labeled with the positive label,
//! spanning the first to the last sample of the run.

use serde::Serialize;

use super::{names, Component, GlobalMetric, MetricRegistry, MetricResult, Undefined};
use crate::association::TrackAssociation;
use crate::interval::{union_all, Interval, IntervalSet};
use crate::model::{GroundTruthTrajectory, Track};

/// Confusion-matrix quadrants measured in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionDurations {
    pub tp_s: f64,
    pub fp_s: f64,
    pub fn_s: f64,
    /// Only available when negative (non-target) ground truth is supplied.
    pub tn_s: Option<f64>,
    pub positive_label: String,
}

/// Times at which `track` carries the positive label.
pub fn identification_segments(track: &Track, positive_label: &str) -> IntervalSet {
    let s = track.samples();
    let mut out = Vec::new();
    let mut k = 0;
    while k < s.len() {
        if s[k].ident.as_deref() != Some(positive_label) {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < s.len() && s[k + 1].ident.as_deref() == Some(positive_label) {
            k += 1;
        }
        out.push(Interval::new(s[start].t, s[k].t));
        k += 1;
    }
    IntervalSet::from_intervals(out)
}

/// Duration-based TP/FP/FN (and TN when possible).
///
/// Truths whose class equals `positive_label` are targets. TP sums, per
/// target, the time it is covered by an associated positively identified
/// track. FP is positively identified track time not explained by such an
/// association. FN is the remaining target presence. When non-target truths
/// exist, TN is the time tracks associated with them carry no positive label.
pub fn confusion_durations(
    truths: &[GroundTruthTrajectory],
    tracks: &[Track],
    assoc: &TrackAssociation,
    positive_label: &str,
) -> ConfusionDurations {
    let ident: Vec<IntervalSet> = tracks.iter().map(|t| identification_segments(t, positive_label)).collect();
    let is_target = |gt: &GroundTruthTrajectory| gt.class.as_str() == positive_label;

    let mut tp = 0.0;
    let mut presence = 0.0;
    let mut explained = Vec::new();
    for (i, gt) in truths.iter().enumerate() {
        if !is_target(gt) {
            continue;
        }
        let hit: Vec<IntervalSet> = (0..tracks.len()).map(|j| assoc.a(i, j).intersect(&ident[j])).collect();
        let covered = union_all(hit.iter());
        tp += covered.duration();
        presence += gt.aoi_presence.duration();
        explained.push(covered);
    }
    let explained = union_all(explained.iter());
    let fp = union_all(ident.iter()).subtract(&explained).duration();

    let negatives: Vec<usize> = (0..truths.len()).filter(|&i| !is_target(&truths[i])).collect();
    let tn = (!negatives.is_empty()).then(|| {
        let quiet: Vec<IntervalSet> = negatives
            .iter()
            .flat_map(|&i| (0..tracks.len()).map(move |j| (i, j)))
            .map(|(i, j)| assoc.a(i, j).subtract(&ident[j]))
            .collect();
        union_all(quiet.iter()).duration()
    });

    ConfusionDurations {
        tp_s: tp,
        fp_s: fp,
        fn_s: (presence - tp).max(0.0),
        tn_s: tn,
        positive_label: positive_label.to_string(),
    }
}

fn ratio(num: f64, den: f64, what: &'static str) -> MetricResult {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Undefined::ZeroDenominator(what))
    }
}

pub fn f1(cd: &ConfusionDurations) -> MetricResult {
    ratio(2.0 * cd.tp_s, 2.0 * cd.tp_s + cd.fp_s + cd.fn_s, "2TP + FP + FN")
}

pub fn precision_id(cd: &ConfusionDurations) -> MetricResult {
    ratio(cd.tp_s, cd.tp_s + cd.fp_s, "TP + FP")
}

/// Probability of detection (recall).
pub fn recall_pod(cd: &ConfusionDurations) -> MetricResult {
    ratio(cd.tp_s, cd.tp_s + cd.fn_s, "TP + FN")
}

/// Missed alarm rate.
pub fn mar(cd: &ConfusionDurations) -> MetricResult {
    ratio(cd.fn_s, cd.tp_s + cd.fn_s, "TP + FN")
}

/// False alarm rate; needs true negatives.
pub fn far(cd: &ConfusionDurations) -> MetricResult {
    let tn = cd.tn_s.ok_or(Undefined::MissingTrueNegatives)?;
    ratio(cd.fp_s, cd.fp_s + tn, "FP + TN")
}

pub(super) fn register(r: &mut MetricRegistry) {
    let c = Component::Identification;
    r.register(Box::new(GlobalMetric { name: names::F1, component: c, unit: "ratio", compute: |i| f1(i.confusion()) }));
    r.register(Box::new(GlobalMetric {
        name: names::IDENTIFICATION_PRECISION,
        component: c,
        unit: "ratio",
        compute: |i| precision_id(i.confusion()),
    }));
    r.register(Box::new(GlobalMetric {
        name: names::POD,
        component: c,
        unit: "ratio",
        compute: |i| recall_pod(i.confusion()),
    }));
    r.register(Box::new(GlobalMetric { name: names::MAR, component: c, unit: "ratio", compute: |i| mar(i.confusion()) }));
    r.register(Box::new(GlobalMetric { name: names::FAR, component: c, unit: "ratio", compute: |i| far(i.confusion()) }));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::{associate_tracks, TrackSampleLinks};
    use crate::model::{ObjectClass, StateSample, TrackSample, Vec3};

    fn cd(tp: f64, fp: f64, fn_: f64, tn: Option<f64>) -> ConfusionDurations {
        ConfusionDurations { tp_s: tp, fp_s: fp, fn_s: fn_, tn_s: tn, positive_label: "uav".into() }
    }

    fn labeled(id: &str, labels: &[Option<&str>]) -> Track {
        Track::new(
            id,
            labels
                .iter()
                .enumerate()
                .map(|(k, l)| {
                    let s = TrackSample::new(k as f64, Vec3::zeros());
                    match l {
                        Some(l) => s.with_ident(*l),
                        None => s,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn equal_quadrants() {
        let c = cd(10.0, 10.0, 10.0, None);
        assert_eq!(f1(&c), Ok(0.5));
        assert_eq!(precision_id(&c), Ok(0.5));
        assert_eq!(recall_pod(&c), Ok(0.5));
        assert_eq!(mar(&c), Ok(0.5));
        assert_eq!(far(&c), Err(Undefined::MissingTrueNegatives));
    }

    #[test]
    fn perfect_and_far() {
        assert_eq!(f1(&cd(7.0, 0.0, 0.0, None)), Ok(1.0));
        assert_eq!(far(&cd(0.0, 10.0, 0.0, Some(30.0))), Ok(0.25));
        assert!(f1(&cd(0.0, 0.0, 0.0, None)).is_err());
    }

    #[test]
    fn segments_from_labels() {
        let t = labeled("a", &[Some("uav"); 4]);
        assert_eq!(identification_segments(&t, "uav"), IntervalSet::single(0.0, 3.0));
        let t = labeled("a", &[None, Some("bird"), None]);
        assert!(identification_segments(&t, "uav").is_empty());
        let t = labeled("a", &[Some("uav"), Some("uav"), Some("bird"), Some("uav"), Some("uav")]);
        assert_eq!(identification_segments(&t, "uav").len(), 2);
    }

    #[test]
    fn spurious_identified_track() {
        let t = Track::new(
            "x",
            vec![TrackSample::new(0.0, Vec3::zeros()).with_ident("uav"), TrackSample::new(60.0, Vec3::zeros()).with_ident("uav")],
        )
        .unwrap();
        let assoc = TrackAssociation { intervals: vec![], samples: vec![TrackSampleLinks::default()] };
        let c = confusion_durations(&[], &[t], &assoc, "uav");
        assert_eq!((c.tp_s, c.fp_s, c.fn_s, c.tn_s), (0.0, 60.0, 0.0, None));
    }

    #[test]
    fn perfect_system() {
        let gt = GroundTruthTrajectory::new(
            "d",
            ObjectClass::Uav,
            vec![StateSample::new(0.0, Vec3::zeros()), StateSample::new(9.0, Vec3::zeros())],
        )
        .unwrap();
        let t = labeled("a", &[Some("uav"); 10]);
        let assoc = associate_tracks(std::slice::from_ref(&gt), std::slice::from_ref(&t), 50.0, 1.0);
        let c = confusion_durations(&[gt], &[t], &assoc, "uav");
        assert_eq!((c.tp_s, c.fp_s, c.fn_s), (9.0, 0.0, 0.0));
        assert_eq!(f1(&c), Ok(1.0));
    }

    #[test]
    fn bird_truth_enables_true_negatives() {
        let bird = GroundTruthTrajectory::new(
            "b",
            ObjectClass::Bird,
            vec![StateSample::new(0.0, Vec3::zeros()), StateSample::new(9.0, Vec3::zeros())],
        )
        .unwrap();
        let t = labeled("a", &[Some("bird"); 10]);
        let assoc = associate_tracks(std::slice::from_ref(&bird), std::slice::from_ref(&t), 50.0, 1.0);
        let c = confusion_durations(&[bird], &[t], &assoc, "uav");
        assert_eq!(c.tn_s, Some(9.0));
        assert_eq!(far(&c), Ok(0.0));
    }
}
