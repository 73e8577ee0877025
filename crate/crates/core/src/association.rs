//! Association of detections and tracks with ground truth.
//!
//! Both associations use nearest-neighbor gating with a hard 3D Euclidean
//! gate against the interpolated truth position. Ties go to the truth with
//! the lexicographically lower `object_id`.

use crate::interval::{Interval, IntervalSet, TimeStamp};
use crate::model::{distance_2d, distance_3d, Detection, GroundTruthTrajectory, Track};

/// Distances between a detection (or track sample) and its associated truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    pub d2: f64,
    pub d3: f64,
}

/// Detection-to-truth association. Each detection maps to at most one truth.
#[derive(Debug, Clone, Default)]
pub struct DetectionAssociation {
    /// Per detection: index of the associated truth.
    pub truth_of: Vec<Option<usize>>,
    /// Per detection: distance to the associated truth.
    pub distance: Vec<Option<PairDistance>>,
    n_truths: usize,
}

impl DetectionAssociation {
    pub fn n_truths(&self) -> usize {
        self.n_truths
    }

    pub fn n_detections(&self) -> usize {
        self.truth_of.len()
    }

    /// `A_ij` in matrix form.
    pub fn is_associated(&self, truth: usize, detection: usize) -> bool {
        self.truth_of[detection] == Some(truth)
    }

    /// Detection indices associated with `truth`.
    pub fn detections_of(&self, truth: usize) -> impl Iterator<Item = usize> + '_ {
        self.truth_of.iter().enumerate().filter(move |(_, t)| **t == Some(truth)).map(|(j, _)| j)
    }
}

/// Nearest truth within `gate_m` of `position` at time `t`.
fn nearest_truth(
    truths: &[GroundTruthTrajectory],
    t: TimeStamp,
    position: &crate::model::Vec3,
    gate_m: f64,
    eligible: impl Fn(&GroundTruthTrajectory) -> bool,
) -> Option<(usize, PairDistance)> {
    let mut best: Option<(usize, PairDistance)> = None;
    for (i, gt) in truths.iter().enumerate() {
        if !eligible(gt) {
            continue;
        }
        let Some(p) = gt.position_at(t) else { continue };
        let d3 = distance_3d(&p, position);
        if d3 > gate_m {
            continue;
        }
        let better = match best {
            None => true,
            Some((k, b)) => d3 < b.d3 || (d3 == b.d3 && gt.object_id < truths[k].object_id),
        };
        if better {
            best = Some((i, PairDistance { d2: distance_2d(&p, position), d3 }));
        }
    }
    best
}

pub fn associate_detections(
    truths: &[GroundTruthTrajectory],
    detections: &[Detection],
    gate_m: f64,
) -> DetectionAssociation {
    let mut out = DetectionAssociation {
        truth_of: Vec::with_capacity(detections.len()),
        distance: Vec::with_capacity(detections.len()),
        n_truths: truths.len(),
    };
    for d in detections {
        let hit = nearest_truth(truths, d.t, &d.position, gate_m, |_| true);
        out.truth_of.push(hit.map(|h| h.0));
        out.distance.push(hit.map(|h| h.1));
    }
    out
}

/// Per-sample association state of one track.
#[derive(Debug, Clone, Default)]
pub struct TrackSampleLinks {
    /// `A_ij(k)`: truth index per sample, after short-segment removal.
    pub truth_of: Vec<Option<usize>>,
    pub distance: Vec<Option<PairDistance>>,
}

/// Track-to-truth association.
#[derive(Debug, Clone, Default)]
pub struct TrackAssociation {
    /// `intervals[i][j]` is `A_ij` for truth `i` and track `j`.
    pub intervals: Vec<Vec<IntervalSet>>,
    pub samples: Vec<TrackSampleLinks>,
}

impl TrackAssociation {
    pub fn n_truths(&self) -> usize {
        self.intervals.len()
    }

    pub fn n_tracks(&self) -> usize {
        self.samples.len()
    }

    pub fn a(&self, truth: usize, track: usize) -> &IntervalSet {
        &self.intervals[truth][track]
    }

    /// `∪_j A_ij`.
    pub fn union_for(&self, truth: usize) -> IntervalSet {
        crate::interval::union_all(self.intervals[truth].iter())
    }

    /// Track indices with a non-empty association to `truth`.
    pub fn tracks_of(&self, truth: usize) -> impl Iterator<Item = usize> + '_ {
        self.intervals[truth].iter().enumerate().filter(|(_, s)| !s.is_empty()).map(|(j, _)| j)
    }

    /// Times at which `track` is associated with any truth.
    pub fn associated_time(&self, track: usize) -> IntervalSet {
        crate::interval::union_all(self.intervals.iter().map(|row| &row[track]))
    }
}

/// Associates every track sample with its nearest truth present in the AoI,
/// groups consecutive same-truth samples into segments, and keeps segments
/// spanning at least `min_segment_s`.
pub fn associate_tracks(
    truths: &[GroundTruthTrajectory],
    tracks: &[Track],
    gate_m: f64,
    min_segment_s: f64,
) -> TrackAssociation {
    let mut out = TrackAssociation {
        intervals: vec![vec![IntervalSet::empty(); tracks.len()]; truths.len()],
        samples: Vec::with_capacity(tracks.len()),
    };
    for (j, track) in tracks.iter().enumerate() {
        let raw: Vec<Option<(usize, PairDistance)>> = track
            .samples()
            .iter()
            .map(|s| nearest_truth(truths, s.t, &s.position, gate_m, |gt| gt.aoi_presence.contains(s.t)))
            .collect();

        let mut links = TrackSampleLinks {
            truth_of: vec![None; raw.len()],
            distance: vec![None; raw.len()],
        };
        let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); truths.len()];
        let mut k = 0;
        while k < raw.len() {
            let Some((i, _)) = raw[k] else {
                k += 1;
                continue;
            };
            let mut end = k;
            while end + 1 < raw.len() && raw[end + 1].map(|r| r.0) == Some(i) {
                end += 1;
            }
            let (t0, t1) = (track.samples()[k].t, track.samples()[end].t);
            if t1 - t0 >= min_segment_s {
                for m in k..=end {
                    links.truth_of[m] = Some(i);
                    links.distance[m] = raw[m].map(|r| r.1);
                }
                pieces[i].push(Interval::new(t0, t1));
            }
            k = end + 1;
        }
        for (i, p) in pieces.into_iter().enumerate() {
            if !p.is_empty() {
                out.intervals[i][j] = IntervalSet::from_intervals(p).intersect(&truths[i].aoi_presence);
            }
        }
        out.samples.push(links);
    }
    out
}
