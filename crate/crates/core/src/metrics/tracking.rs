//! Tracking metrics over a [`TrackAssociation`].

use super::{names, Component, GlobalMetric, MetricInput, MetricRegistry, MetricResult, PerTruthMetric, Undefined};
use crate::association::TrackAssociation;
use crate::interval::{union_all, Interval, IntervalSet, MERGE_EPSILON_S};
use crate::model::{GroundTruthTrajectory, Track};

use super::detection::Mode;

/// Multi-interval instances up to this many tracks are solved exhaustively.
pub const EXHAUSTIVE_SUBSET_LIMIT: usize = 12;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Completeness: tracked time over `denominator` (normally AoI presence).
pub fn track_completeness(assoc: &TrackAssociation, truth: usize, denominator: &IntervalSet) -> MetricResult {
    let d = denominator.duration();
    if !(d > 0.0) {
        return Err(Undefined::DegenerateTruth);
    }
    Ok((assoc.union_for(truth).duration() / d).clamp(0.0, 1.0))
}

/// Minimal-cardinality set of tracks whose associations cover the whole
/// tracked time of one truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSubset {
    /// Track indices, in selection order.
    pub tracks: Vec<usize>,
    /// False when the greedy sweep was used on multi-interval associations
    /// too large for exhaustive search.
    pub optimal: bool,
}

impl MinimalSubset {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }
}

struct Candidate<'a> {
    index: usize,
    id: &'a str,
    set: IntervalSet,
    total: f64,
}

/// `A^min` for one truth.
///
/// Single-interval associations are solved by a greedy sweep, which is
/// optimal for interval covering: from the leftmost uncovered time, take the
/// track covering that time that reaches furthest right (ties: longer total
/// association, then lower track id), and jump across gaps in the union.
/// Multi-interval associations of up to [`EXHAUSTIVE_SUBSET_LIMIT`] tracks
/// are solved exhaustively; larger ones fall back to the greedy sweep.
pub fn minimal_association_subset(
    assoc: &TrackAssociation,
    truth: usize,
    tracks: &[Track],
) -> Result<MinimalSubset, Undefined> {
    let mut cands: Vec<Candidate<'_>> = assoc
        .tracks_of(truth)
        .map(|j| {
            let set = assoc.a(truth, j).without_instants();
            let total = set.duration();
            Candidate { index: j, id: tracks[j].track_id.as_str(), set, total }
        })
        .collect();
    if cands.is_empty() {
        return Err(Undefined::NoAssociations);
    }
    cands.sort_by(|a, b| a.id.cmp(b.id));
    let useful: Vec<&Candidate<'_>> = cands.iter().filter(|c| !c.set.is_empty()).collect();
    if useful.is_empty() {
        return Ok(MinimalSubset { tracks: vec![cands[0].index], optimal: true });
    }
    let single = useful.iter().all(|c| c.set.len() == 1);
    if !single && useful.len() <= EXHAUSTIVE_SUBSET_LIMIT {
        return Ok(exhaustive_cover(&useful));
    }
    Ok(MinimalSubset { tracks: greedy_cover(&useful), optimal: single })
}

fn greedy_cover(cands: &[&Candidate<'_>]) -> Vec<usize> {
    let target = union_all(cands.iter().map(|c| &c.set));
    let mut covered = IntervalSet::empty();
    let mut used = vec![false; cands.len()];
    let mut picked = Vec::new();
    loop {
        let remaining = target.subtract(&covered);
        let Some(piece) = remaining.intervals().iter().find(|iv| iv.duration() > 2.0 * MERGE_EPSILON_S).copied()
        else {
            break;
        };
        let x = piece.start;
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in cands.iter().enumerate() {
            if used[k] {
                continue;
            }
            let reach = c
                .set
                .intervals()
                .iter()
                .filter(|iv| iv.start <= x + 2.0 * MERGE_EPSILON_S && iv.end > x + 1e-9)
                .map(|iv| iv.end)
                .fold(f64::NEG_INFINITY, f64::max);
            if !reach.is_finite() {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, r)) => {
                    reach > r + 1e-9 || ((reach - r).abs() <= 1e-9 && c.total > cands[b].total + 1e-9)
                }
            };
            if better {
                best = Some((k, reach));
            }
        }
        // Every uncovered point of the union lies in some unused track's set,
        // so a candidate exists; fall back to the largest overlap regardless.
        let k = best.map(|b| b.0).unwrap_or_else(|| {
            let piece = IntervalSet::single(piece.start, piece.end);
            (0..cands.len())
                .filter(|&k| !used[k])
                .max_by(|&a, &b| {
                    let oa = cands[a].set.intersect(&piece).duration();
                    let ob = cands[b].set.intersect(&piece).duration();
                    oa.total_cmp(&ob).then(b.cmp(&a))
                })
                .expect("an unused track remains while coverage is incomplete")
        });
        used[k] = true;
        covered = covered.union(&cands[k].set);
        picked.push(cands[k].index);
    }
    picked
}

fn exhaustive_cover(cands: &[&Candidate<'_>]) -> MinimalSubset {
    let target = union_all(cands.iter().map(|c| &c.set)).duration();
    let n = cands.len();
    for size in 1..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let u = union_all(combo.iter().map(|&k| &cands[k].set));
            if u.duration() >= target - 1e-9 {
                return MinimalSubset { tracks: combo.iter().map(|&k| cands[k].index).collect(), optimal: true };
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    MinimalSubset { tracks: cands.iter().map(|c| c.index).collect(), optimal: true }
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for m in i + 1..k {
                combo[m] = combo[m - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Track number changes per hour of tracked time.
pub fn track_continuity(assoc: &TrackAssociation, truth: usize, tracks: &[Track]) -> MetricResult {
    let subset = minimal_association_subset(assoc, truth, tracks)?;
    let hours = assoc.union_for(truth).duration() / SECONDS_PER_HOUR;
    if !(hours > 0.0) {
        return Err(Undefined::ZeroDenominator("tracked duration"));
    }
    Ok((subset.len() as f64 - 1.0) / hours)
}

/// Sorted, deduplicated endpoints of all given sets.
fn breakpoints<'a>(sets: impl IntoIterator<Item = &'a IntervalSet>) -> Vec<f64> {
    let mut pts: Vec<f64> =
        sets.into_iter().flat_map(|s| s.intervals().iter().flat_map(|iv| [iv.start, iv.end])).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Time-weighted mean number of tracks on the truth while it has at least one.
pub fn track_ambiguity(assoc: &TrackAssociation, truth: usize) -> MetricResult {
    let row = &assoc.intervals[truth];
    if row.iter().all(IntervalSet::is_empty) {
        return Err(Undefined::NoAssociations);
    }
    let pts = breakpoints(row.iter());
    let (mut num, mut den) = (0.0, 0.0);
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let count = row.iter().filter(|s| s.contains(mid)).count();
        if count > 0 {
            num += count as f64 * (w[1] - w[0]);
            den += w[1] - w[0];
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Undefined::ZeroDenominator("tracked duration"))
    }
}

/// Time-weighted mean fraction of existing tracks that represent no truth,
/// over the parts of `window` in which at least one track exists.
pub fn track_spuriousness(tracks: &[Track], assoc: &TrackAssociation, window: Interval) -> MetricResult {
    let exist: Vec<IntervalSet> = tracks.iter().map(|t| t.range().clip(window.start, window.end)).collect();
    let linked: Vec<IntervalSet> = (0..tracks.len()).map(|j| assoc.associated_time(j)).collect();
    let pts = breakpoints(exist.iter().chain(linked.iter()));
    let (mut num, mut den) = (0.0, 0.0);
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let n_t = exist.iter().filter(|s| s.contains(mid)).count();
        if n_t == 0 {
            continue;
        }
        let n_a = (0..tracks.len()).filter(|&j| exist[j].contains(mid) && linked[j].contains(mid)).count();
        num += (n_t - n_a) as f64 / n_t as f64 * (w[1] - w[0]);
        den += w[1] - w[0];
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Undefined::NoTracks)
    }
}

/// Duration-weighted RMS of the per-track RMS distance over associated samples.
pub fn track_positional_accuracy(assoc: &TrackAssociation, truth: usize, mode: Mode) -> MetricResult {
    let mut per_track = Vec::new();
    for j in assoc.tracks_of(truth) {
        let links = &assoc.samples[j];
        let sq: Vec<f64> = links
            .truth_of
            .iter()
            .zip(&links.distance)
            .filter(|(t, _)| **t == Some(truth))
            .filter_map(|(_, d)| *d)
            .map(|d| match mode {
                Mode::Planar => d.d2 * d.d2,
                Mode::Spatial => d.d3 * d.d3,
            })
            .collect();
        if sq.is_empty() {
            continue;
        }
        let acc2 = sq.iter().sum::<f64>() / sq.len() as f64;
        per_track.push((assoc.a(truth, j).duration(), sq.len() as f64, acc2));
    }
    if per_track.is_empty() {
        return Err(Undefined::NoAssociations);
    }
    let total_d: f64 = per_track.iter().map(|p| p.0).sum();
    // Zero-duration associations (instants) fall back to sample-count weights.
    let weight = |p: &(f64, f64, f64)| if total_d > 0.0 { p.0 } else { p.1 };
    let num: f64 = per_track.iter().map(|p| weight(p) * p.2).sum();
    let den: f64 = per_track.iter().map(weight).sum();
    Ok((num / den).sqrt())
}

/// RMS velocity error over all associated samples of all tracks, plus the
/// number of associated samples skipped for lack of a track velocity.
pub fn track_velocity_accuracy(
    gt: &GroundTruthTrajectory,
    truth: usize,
    tracks: &[Track],
    assoc: &TrackAssociation,
) -> (MetricResult, usize) {
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    let mut any = false;
    for (j, track) in tracks.iter().enumerate() {
        for (k, s) in track.samples().iter().enumerate() {
            if assoc.samples[j].truth_of[k] != Some(truth) {
                continue;
            }
            any = true;
            let (Some(v), Ok((_, vt))) = (track.velocity_at(k), gt.sample_at(s.t)) else {
                skipped += 1;
                continue;
            };
            sum += (v - vt).norm_squared();
            n += 1;
        }
    }
    let value = if !any {
        Err(Undefined::NoAssociations)
    } else if n == 0 {
        Err(Undefined::NoVelocity)
    } else {
        Ok((sum / n as f64).sqrt())
    };
    (value, skipped)
}

/// Largest single-track association time over `denominator`.
pub fn longest_track_segment(assoc: &TrackAssociation, truth: usize, denominator: &IntervalSet) -> MetricResult {
    let d = denominator.duration();
    if !(d > 0.0) {
        return Err(Undefined::DegenerateTruth);
    }
    let best = assoc.intervals[truth].iter().map(IntervalSet::duration).fold(0.0, f64::max);
    Ok((best / d).clamp(0.0, 1.0))
}

/// Start of the earliest association minus first AoI entry; positive = late.
pub fn tracking_immediateness(gt: &GroundTruthTrajectory, assoc: &TrackAssociation, truth: usize) -> MetricResult {
    let entry = gt.aoi_presence.start().ok_or(Undefined::DegenerateTruth)?;
    assoc.intervals[truth]
        .iter()
        .filter_map(IntervalSet::start)
        .reduce(f64::min)
        .map(|first| first - entry)
        .ok_or(Undefined::NoAssociations)
}

pub(super) fn register(r: &mut MetricRegistry) {
    let c = Component::Tracking;
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_COMPLETENESS,
        component: c,
        unit: "ratio",
        compute: |inp: &MetricInput<'_>, i| track_completeness(inp.track_assoc, i, &inp.truth_time(i)),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_CONTINUITY,
        component: c,
        unit: "changes/h",
        compute: |inp, i| track_continuity(inp.track_assoc, i, inp.tracks),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_AMBIGUITY,
        component: c,
        unit: "tracks",
        compute: |inp, i| track_ambiguity(inp.track_assoc, i),
    }));
    r.register(Box::new(GlobalMetric {
        name: names::TRACK_SPURIOUSNESS,
        component: c,
        unit: "ratio",
        compute: |inp| track_spuriousness(inp.tracks, inp.track_assoc, inp.window),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_POSITIONAL_ACCURACY_2D,
        component: c,
        unit: "m",
        compute: |inp, i| track_positional_accuracy(inp.track_assoc, i, Mode::Planar),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_POSITIONAL_ACCURACY_3D,
        component: c,
        unit: "m",
        compute: |inp, i| track_positional_accuracy(inp.track_assoc, i, Mode::Spatial),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACK_VELOCITY_ACCURACY,
        component: c,
        unit: "m/s",
        compute: |inp: &MetricInput<'_>, i| track_velocity_accuracy(&inp.truths[i], i, inp.tracks, inp.track_assoc).0,
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::LONGEST_TRACK_SEGMENT,
        component: c,
        unit: "ratio",
        compute: |inp: &MetricInput<'_>, i| longest_track_segment(inp.track_assoc, i, &inp.truth_time(i)),
    }));
    r.register(Box::new(PerTruthMetric {
        name: names::TRACKING_IMMEDIATENESS,
        component: c,
        unit: "s",
        compute: |inp: &MetricInput<'_>, i| tracking_immediateness(&inp.truths[i], inp.track_assoc, i),
    }));
}
