//! Brute-force reference implementations used by the acceptance runner.
//!
//! Everything here works on integer milliseconds and 1 ms rasters, and
//! deliberately shares no code with the engine beyond its plain data types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dtieval_core::interval::{Interval, IntervalSet};
use dtieval_core::model::{Detection, GroundTruthTrajectory, ObjectClass, StateSample, Track, TrackSample, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const GATE_M: f64 = 50.0;
pub const MIN_SEGMENT_MS: i64 = 1000;
pub const POSITIVE: &str = "uav";

/// Closed integer-millisecond interval.
pub type Ms = (i64, i64);

pub fn secs(ms: i64) -> f64 {
    ms as f64 / 1000.0
}

/// Raster of `[0, len)` ms; cell `c` stands for `[c, c + 1]`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Raster(pub Vec<bool>);

impl Raster {
    pub fn empty(len: usize) -> Self {
        Raster(vec![false; len])
    }

    pub fn of(len: usize, ivs: &[Ms]) -> Self {
        let mut r = Raster::empty(len);
        for &(a, b) in ivs {
            for c in a.max(0)..b.min(len as i64) {
                r.0[c as usize] = true;
            }
        }
        r
    }

    /// Raster of an engine set whose endpoints lie on the ms grid.
    pub fn of_set(len: usize, s: &IntervalSet) -> Self {
        let ivs: Vec<Ms> = s
            .intervals()
            .iter()
            .map(|iv| ((iv.start * 1000.0).round() as i64, (iv.end * 1000.0).round() as i64))
            .collect();
        Raster::of(len, &ivs)
    }

    pub fn or(&self, o: &Raster) -> Raster {
        Raster(self.0.iter().zip(&o.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn and(&self, o: &Raster) -> Raster {
        Raster(self.0.iter().zip(&o.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn and_not(&self, o: &Raster) -> Raster {
        Raster(self.0.iter().zip(&o.0).map(|(a, b)| *a && !*b).collect())
    }

    pub fn count(&self) -> i64 {
        self.0.iter().filter(|x| **x).count() as i64
    }

    pub fn seconds(&self) -> f64 {
        secs(self.count())
    }
}

pub fn to_set(ivs: &[Ms]) -> IntervalSet {
    IntervalSet::from_intervals(ivs.iter().map(|&(a, b)| Interval::new(secs(a), secs(b))))
}

#[derive(Clone, Debug)]
pub struct OTruth {
    pub id: String,
    pub class: ObjectClass,
    pub t: Vec<i64>,
    pub pos: Vec<[f64; 3]>,
    pub vel: Option<Vec<[f64; 3]>>,
    pub presence: Vec<Ms>,
}

#[derive(Clone, Debug)]
pub struct OSample {
    pub t: i64,
    pub pos: [f64; 3],
    pub vel: Option<[f64; 3]>,
    pub ident: Option<String>,
}

#[derive(Clone, Debug)]
pub struct OTrack {
    pub id: String,
    pub samples: Vec<OSample>,
}

#[derive(Clone, Debug)]
pub struct ODet {
    pub t: i64,
    pub pos: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct OTrial {
    pub window: i64,
    pub truths: Vec<OTruth>,
    pub tracks: Vec<OTrack>,
    pub dets: Vec<ODet>,
}

fn v(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl OTrial {
    pub fn sample_count(&self) -> usize {
        self.truths.iter().map(|t| t.t.len()).sum::<usize>()
            + self.tracks.iter().map(|t| t.samples.len()).sum::<usize>()
            + self.dets.len()
    }

    pub fn engine_truths(&self) -> Vec<GroundTruthTrajectory> {
        self.truths
            .iter()
            .map(|o| {
                let samples = o
                    .t
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        let s = StateSample::new(secs(t), v(o.pos[k]));
                        match &o.vel {
                            Some(vel) => s.with_velocity(v(vel[k])),
                            None => s,
                        }
                    })
                    .collect();
                GroundTruthTrajectory::new(o.id.clone(), o.class, samples).unwrap().with_presence(to_set(&o.presence))
            })
            .collect()
    }

    pub fn engine_tracks(&self) -> Vec<Track> {
        self.tracks
            .iter()
            .map(|o| {
                let samples = o
                    .samples
                    .iter()
                    .map(|s| {
                        let mut ts = TrackSample::new(secs(s.t), v(s.pos));
                        ts.velocity = s.vel.map(v);
                        match &s.ident {
                            Some(l) => ts.with_ident(l.clone()),
                            None => ts,
                        }
                    })
                    .collect();
                Track::new(o.id.clone(), samples).unwrap()
            })
            .collect()
    }

    pub fn engine_detections(&self) -> Vec<Detection> {
        self.dets
            .iter()
            .enumerate()
            .map(|(k, d)| Detection {
                detection_id: format!("d{k:03}"),
                t: secs(d.t),
                position: v(d.pos),
                sensor_id: "s".into(),
            })
            .collect()
    }
}

fn lerp(a: [f64; 3], b: [f64; 3], w: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * w, a[1] + (b[1] - a[1]) * w, a[2] + (b[2] - a[2]) * w]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn norm2d(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

/// Finite-difference velocity at sample `k` (central inside, one-sided at ends).
fn diff_vel(t: &[i64], p: &[[f64; 3]], k: usize) -> [f64; 3] {
    let lo = if k == 0 { 0 } else { k - 1 };
    let hi = if k + 1 >= t.len() { t.len() - 1 } else { k + 1 };
    let dt = secs(t[hi]) - secs(t[lo]);
    let d = sub(p[hi], p[lo]);
    [d[0] / dt, d[1] / dt, d[2] / dt]
}

impl OTruth {
    fn bracket(&self, t: i64) -> Option<(usize, usize, f64)> {
        if t < self.t[0] || t > *self.t.last().unwrap() {
            return None;
        }
        for k in 0..self.t.len() {
            if self.t[k] == t {
                return Some((k, k, 0.0));
            }
            if self.t[k] < t && t < self.t[k + 1] {
                let w = (secs(t) - secs(self.t[k])) / (secs(self.t[k + 1]) - secs(self.t[k]));
                return Some((k, k + 1, w));
            }
        }
        unreachable!()
    }

    pub fn pos_at(&self, t: i64) -> Option<[f64; 3]> {
        self.bracket(t).map(|(a, b, w)| lerp(self.pos[a], self.pos[b], w))
    }

    fn vel_of(&self, k: usize) -> [f64; 3] {
        match &self.vel {
            Some(v) => v[k],
            None => diff_vel(&self.t, &self.pos, k),
        }
    }

    pub fn vel_at(&self, t: i64) -> Option<[f64; 3]> {
        self.bracket(t).map(|(a, b, w)| lerp(self.vel_of(a), self.vel_of(b), w))
    }

    pub fn present(&self, t: i64) -> bool {
        self.presence.iter().any(|&(a, b)| a <= t && t <= b)
    }

    pub fn presence_start(&self) -> i64 {
        self.presence.iter().map(|p| p.0).min().unwrap()
    }
}

/// Nearest eligible truth within the gate; ties to the lower id.
fn nearest(truths: &[OTruth], t: i64, p: [f64; 3], eligible: impl Fn(&OTruth) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, gt) in truths.iter().enumerate() {
        if !eligible(gt) {
            continue;
        }
        let Some(q) = gt.pos_at(t) else { continue };
        let d = norm(sub(q, p));
        if d > GATE_M {
            continue;
        }
        let take = match best {
            None => true,
            Some((k, bd)) => d < bd || (d == bd && gt.id < truths[k].id),
        };
        if take {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}

pub struct OracleAssoc {
    pub det_truth: Vec<Option<usize>>,
    /// `links[j][k]`: truth of sample `k` of track `j` after short-run removal.
    pub links: Vec<Vec<Option<usize>>>,
    /// `a[i][j]`: closed ms intervals of `A_ij` (instants kept).
    pub a: Vec<Vec<Vec<Ms>>>,
}

pub fn associate(trial: &OTrial) -> OracleAssoc {
    let truths = &trial.truths;
    let det_truth = trial.dets.iter().map(|d| nearest(truths, d.t, d.pos, |_| true)).collect();
    let mut links = Vec::new();
    let mut a = vec![vec![Vec::new(); trial.tracks.len()]; truths.len()];
    for (j, tr) in trial.tracks.iter().enumerate() {
        let raw: Vec<Option<usize>> =
            tr.samples.iter().map(|s| nearest(truths, s.t, s.pos, |gt| gt.present(s.t))).collect();
        let mut kept = vec![None; raw.len()];
        let mut k = 0;
        while k < raw.len() {
            let Some(i) = raw[k] else {
                k += 1;
                continue;
            };
            let mut e = k;
            while e + 1 < raw.len() && raw[e + 1] == Some(i) {
                e += 1;
            }
            let (t0, t1) = (tr.samples[k].t, tr.samples[e].t);
            if t1 - t0 >= MIN_SEGMENT_MS {
                kept[k..=e].iter_mut().for_each(|x| *x = Some(i));
                for &(pa, pb) in &truths[i].presence {
                    let (lo, hi) = (t0.max(pa), t1.min(pb));
                    if lo <= hi {
                        a[i][j].push((lo, hi));
                    }
                }
            }
            k = e + 1;
        }
        links.push(kept);
    }
    OracleAssoc { det_truth, links, a }
}

pub type Value = Result<f64, ()>;

fn ratio(n: f64, d: f64) -> Value {
    if d > 0.0 {
        Ok(n / d)
    } else {
        Err(())
    }
}

/// Ident runs of a track as ms intervals.
fn ident_runs(tr: &OTrack) -> Vec<Ms> {
    let mut out = Vec::new();
    let mut start: Option<i64> = None;
    let mut last = 0;
    for s in &tr.samples {
        if s.ident.as_deref() == Some(POSITIVE) {
            start.get_or_insert(s.t);
            last = s.t;
        } else if let Some(a) = start.take() {
            out.push((a, last));
        }
    }
    if let Some(a) = start {
        out.push((a, last));
    }
    out
}

fn track_vel(tr: &OTrack, k: usize) -> Option<[f64; 3]> {
    tr.samples[k].vel.or_else(|| {
        (tr.samples.len() >= 2).then(|| {
            let t: Vec<i64> = tr.samples.iter().map(|s| s.t).collect();
            let p: Vec<[f64; 3]> = tr.samples.iter().map(|s| s.pos).collect();
            diff_vel(&t, &p, k)
        })
    })
}

/// Minimum of a convex function on `[0, 1]` by ternary search.
fn ternary_min(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

fn extent(gt: &OTruth) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(a, b) in &gt.presence {
        let mut ts = vec![a];
        ts.extend(gt.t.iter().copied().filter(|&t| t > a && t < b));
        ts.push(b);
        for w in ts.windows(2) {
            let (p, q) = (gt.pos_at(w[0]).unwrap(), gt.pos_at(w[1]).unwrap());
            hi = hi.max(norm(p)).max(norm(q));
            lo = lo.min(ternary_min(|u| norm(lerp(p, q, u))));
        }
    }
    (lo, hi)
}

/// Smallest number of sets whose union equals the union of all, by trying
/// every subset.
pub fn exhaustive_min_cover(sets: &[Raster]) -> usize {
    let n = sets.len();
    let full = sets.iter().fold(Raster::empty(sets[0].0.len()), |u, s| u.or(s));
    let mut best = n;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let u = (0..n).filter(|k| mask >> k & 1 == 1).fold(Raster::empty(full.0.len()), |u, k| u.or(&sets[k]));
        if u == full {
            best = size;
        }
    }
    best
}

/// Total length of the union of closed ms intervals, by sorting and merging.
pub fn union_length(ivs: &[Ms]) -> i64 {
    let mut v = ivs.to_vec();
    v.sort();
    let mut total = 0;
    let mut cur: Option<Ms> = None;
    for (a, b) in v {
        cur = match cur {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    total + cur.map_or(0, |(a, b)| b - a)
}

/// Smallest subset of single intervals covering their union, by trying
/// every subset.
pub fn exhaustive_min_interval_cover(ivs: &[Ms]) -> usize {
    let n = ivs.len();
    let full = union_length(ivs);
    (1u32..(1 << n))
        .filter(|mask| {
            let pick: Vec<Ms> = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ivs[k]).collect();
            union_length(&pick) == full
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

/// Every metric of the trial, computed from scratch.
pub fn metrics(trial: &OTrial) -> BTreeMap<&'static str, Value> {
    let w = trial.window as usize;
    let asc = associate(trial);
    let nt = trial.truths.len();
    let nk = trial.tracks.len();
    let a_r: Vec<Vec<Raster>> =
        (0..nt).map(|i| (0..nk).map(|j| Raster::of(w, &asc.a[i][j])).collect()).collect();

    let mut per_truth: BTreeMap<&'static str, Vec<Value>> = BTreeMap::new();
    let mut push = |name: &'static str, v: Value| per_truth.entry(name).or_default().push(v);
    for (i, gt) in trial.truths.iter().enumerate() {
        let pres = Raster::of(w, &gt.presence);
        let union = a_r[i].iter().fold(Raster::empty(w), |u, r| u.or(r));

        // detection
        let dets: Vec<usize> = (0..trial.dets.len()).filter(|&k| asc.det_truth[k] == Some(i)).collect();
        let (mut s2, mut s3) = (0.0, 0.0);
        for &k in &dets {
            let d = sub(gt.pos_at(trial.dets[k].t).unwrap(), trial.dets[k].pos);
            s2 += norm2d(d).powi(2);
            s3 += norm(d).powi(2);
        }
        let nd = dets.len() as f64;
        push("location_accuracy_2d", if dets.is_empty() { Err(()) } else { Ok((s2 / nd).sqrt()) });
        push("location_accuracy_3d", if dets.is_empty() { Err(()) } else { Ok((s3 / nd).sqrt()) });
        let ranges: Vec<f64> = dets.iter().map(|&k| norm(gt.pos_at(trial.dets[k].t).unwrap())).collect();
        let (lo, hi) = extent(gt);
        let (near, far) = if ranges.is_empty() || hi - lo <= 1e-9 {
            (Err(()), Err(()))
        } else {
            let rmin = ranges.iter().cloned().fold(f64::INFINITY, f64::min);
            let rmax = ranges.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (Ok(((hi - rmin) / (hi - lo)).clamp(0.0, 1.0)), Ok(((rmax - lo) / (hi - lo)).clamp(0.0, 1.0)))
        };
        push("range_ratio_near", near);
        push("range_ratio_far", far);
        let first_det = dets.iter().map(|&k| trial.dets[k].t).min();
        push("detection_immediateness", first_det.map(|t| secs(t - gt.presence_start())).ok_or(()));

        // tracking
        push("track_completeness", ratio(union.count() as f64, pres.count() as f64));
        push("longest_track_segment", {
            let best = a_r[i].iter().map(Raster::count).max().unwrap_or(0);
            ratio(best as f64, pres.count() as f64)
        });
        let useful: Vec<Raster> = a_r[i].iter().filter(|r| r.count() > 0).cloned().collect();
        push(
            "track_continuity",
            if useful.is_empty() {
                Err(())
            } else {
                let m = exhaustive_min_cover(&useful);
                Ok((m as f64 - 1.0) / (union.count() as f64 / 3_600_000.0))
            },
        );
        let (mut num, mut den) = (0i64, 0i64);
        for c in 0..w {
            let n = a_r[i].iter().filter(|r| r.0[c]).count() as i64;
            if n > 0 {
                num += n;
                den += 1;
            }
        }
        push("track_ambiguity", ratio(num as f64, den as f64));
        let first = asc.a[i].iter().flatten().map(|iv| iv.0).min();
        push("tracking_immediateness", first.map(|t| secs(t - gt.presence_start())).ok_or(()));

        let mut per_track = Vec::new();
        let (mut vs, mut vn, mut any) = (0.0, 0usize, false);
        for (j, tr) in trial.tracks.iter().enumerate() {
            let ks: Vec<usize> = (0..tr.samples.len()).filter(|&k| asc.links[j][k] == Some(i)).collect();
            if ks.is_empty() {
                continue;
            }
            any = true;
            let (mut q2, mut q3) = (0.0, 0.0);
            for &k in &ks {
                let s = &tr.samples[k];
                let d = sub(gt.pos_at(s.t).unwrap(), s.pos);
                q2 += norm2d(d).powi(2);
                q3 += norm(d).powi(2);
                if let (Some(tv), Some(gv)) = (track_vel(tr, k), gt.vel_at(s.t)) {
                    vs += norm(sub(tv, gv)).powi(2);
                    vn += 1;
                }
            }
            let n = ks.len() as f64;
            per_track.push((a_r[i][j].count() as f64, n, q2 / n, q3 / n));
        }
        let total: f64 = per_track.iter().map(|p| p.0).sum();
        let wt = |p: &(f64, f64, f64, f64)| if total > 0.0 { p.0 } else { p.1 };
        let den: f64 = per_track.iter().map(wt).sum();
        let pa = |sel: fn(&(f64, f64, f64, f64)) -> f64| -> Value {
            if per_track.is_empty() {
                Err(())
            } else {
                Ok((per_track.iter().map(|p| wt(p) * sel(p)).sum::<f64>() / den).sqrt())
            }
        };
        push("track_positional_accuracy_2d", pa(|p| p.2));
        push("track_positional_accuracy_3d", pa(|p| p.3));
        push("track_velocity_accuracy", if any && vn > 0 { Ok((vs / vn as f64).sqrt()) } else { Err(()) });
    }

    let targets: Vec<usize> = (0..nt).filter(|&i| trial.truths[i].class.as_str() == POSITIVE).collect();
    let mut out: BTreeMap<&'static str, Value> = BTreeMap::new();
    for (name, vals) in per_truth {
        let defined: Vec<f64> = targets.iter().filter_map(|&i| vals[i].ok()).collect();
        out.insert(name, if defined.is_empty() { Err(()) } else { Ok(defined.iter().sum::<f64>() / defined.len() as f64) });
    }

    // global tracking
    let exist: Vec<Raster> = trial
        .tracks
        .iter()
        .map(|t| Raster::of(w, &[(t.samples[0].t, t.samples.last().unwrap().t)]))
        .collect();
    let linked: Vec<Raster> = (0..nk).map(|j| (0..nt).fold(Raster::empty(w), |u, i| u.or(&a_r[i][j]))).collect();
    let (mut num, mut den) = (0.0, 0i64);
    for c in 0..w {
        let n_t = (0..nk).filter(|&j| exist[j].0[c]).count();
        if n_t == 0 {
            continue;
        }
        let n_a = (0..nk).filter(|&j| exist[j].0[c] && linked[j].0[c]).count();
        num += (n_t - n_a) as f64 / n_t as f64;
        den += 1;
    }
    out.insert("track_spuriousness", ratio(num, den as f64));

    // global detection
    let assoc = asc.det_truth.iter().filter(|t| t.is_some()).count();
    out.insert("detection_precision", ratio(assoc as f64, trial.dets.len() as f64));

    // identification
    let c = confusion(trial, &a_r);
    out.insert("f1", ratio(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn_));
    out.insert("identification_precision", ratio(c.tp, c.tp + c.fp));
    out.insert("pod", ratio(c.tp, c.tp + c.fn_));
    out.insert("mar", ratio(c.fn_, c.tp + c.fn_));
    out.insert("far", match c.tn {
        Some(tn) => ratio(c.fp, c.fp + tn),
        None => Err(()),
    });
    out
}

pub struct Confusion {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub tn: Option<f64>,
}

fn confusion(trial: &OTrial, a_r: &[Vec<Raster>]) -> Confusion {
    let w = trial.window as usize;
    let ident: Vec<Raster> = trial.tracks.iter().map(|t| Raster::of(w, &ident_runs(t))).collect();
    let mut tp = 0i64;
    let mut presence = 0i64;
    let mut explained = Raster::empty(w);
    let mut quiet = Raster::empty(w);
    let mut negatives = false;
    for (i, gt) in trial.truths.iter().enumerate() {
        if gt.class.as_str() == POSITIVE {
            let hit = (0..ident.len()).fold(Raster::empty(w), |u, j| u.or(&a_r[i][j].and(&ident[j])));
            tp += hit.count();
            presence += Raster::of(w, &gt.presence).count();
            explained = explained.or(&hit);
        } else {
            negatives = true;
            for j in 0..ident.len() {
                quiet = quiet.or(&a_r[i][j].and_not(&ident[j]));
            }
        }
    }
    let all_ident = ident.iter().fold(Raster::empty(w), |u, r| u.or(r));
    Confusion {
        tp: secs(tp),
        fp: all_ident.and_not(&explained).seconds(),
        fn_: secs((presence - tp).max(0)),
        tn: negatives.then(|| quiet.seconds()),
    }
}

/// A random small trial: up to 3 truths, 6 tracks and 60 detections.
pub fn random_trial(rng: &mut ChaCha8Rng) -> OTrial {
    let window = 100 * rng.random_range(300..=600i64);
    let n_truth = rng.random_range(1..=3usize);
    let step = Normal::new(0.0, 8.0).unwrap();
    let climb = Normal::new(0.0, 2.0).unwrap();
    let mut truths = Vec::new();
    for i in 0..n_truth {
        let class = if i == 0 || rng.random_bool(0.5) { ObjectClass::Uav } else { ObjectClass::Bird };
        let start = 1000 * rng.random_range(0..=10i64);
        let end = (start + 1000 * rng.random_range(15..=50i64)).min(window / 1000 * 1000);
        let t: Vec<i64> = (start..=end).step_by(1000).collect();
        let mut p = [rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0), rng.random_range(50.0..150.0)];
        let mut pos = Vec::new();
        for _ in &t {
            pos.push(p);
            p = [p[0] + step.sample(rng), p[1] + step.sample(rng), p[2] + climb.sample(rng)];
        }
        let vel = rng.random_bool(0.5).then(|| {
            (0..t.len()).map(|_| [step.sample(rng), step.sample(rng), climb.sample(rng)]).collect()
        });
        let grid = |rng: &mut ChaCha8Rng| start + 100 * rng.random_range(0..=(end - start) / 100);
        let presence = if rng.random_bool(0.5) {
            let (mut a, mut b) = (grid(rng), grid(rng));
            while a == b {
                b = grid(rng);
            }
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            vec![(a, b)]
        } else {
            let mut pts = Vec::new();
            while pts.len() < 4 {
                let x = grid(rng);
                if !pts.contains(&x) {
                    pts.push(x);
                }
            }
            pts.sort();
            vec![(pts[0], pts[1]), (pts[2], pts[3])]
        };
        truths.push(OTruth { id: format!("obj{i}"), class, t, pos, vel, presence });
    }

    let noise = Normal::new(0.0, 8.0).unwrap();
    let labels = [Some("uav"), Some("bird"), None];
    let mut tracks = Vec::new();
    for j in 0..rng.random_range(0..=6usize) {
        let period = [500, 1000, 2000][rng.random_range(0..3)];
        let start = 100 * rng.random_range(0..window / 100);
        let n = rng.random_range(1..=((window - start) / period + 1).min(40) as usize);
        let mut follow = rng.random_range(0..=n_truth);
        let mut label = labels[rng.random_range(0..3)];
        let mut samples = Vec::new();
        for k in 0..n {
            let t = start + k as i64 * period;
            if rng.random_bool(0.15) {
                follow = rng.random_range(0..=n_truth);
            }
            if rng.random_bool(0.2) {
                label = labels[rng.random_range(0..3)];
            }
            let base = truths.get(follow).and_then(|gt| gt.pos_at(t));
            let pos = match base {
                Some(q) => {
                    let jump = if rng.random_bool(0.1) { 120.0 } else { 0.0 };
                    [q[0] + noise.sample(rng) + jump, q[1] + noise.sample(rng), q[2] + noise.sample(rng)]
                }
                None => [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0), rng.random_range(0.0..200.0)],
            };
            let vel = rng.random_bool(0.5).then(|| [step.sample(rng), step.sample(rng), climb.sample(rng)]);
            samples.push(OSample { t, pos, vel, ident: label.map(String::from) });
        }
        tracks.push(OTrack { id: format!("trk{j}"), samples });
    }

    let dnoise = Normal::new(0.0, 15.0).unwrap();
    let mut dets = Vec::new();
    for _ in 0..rng.random_range(0..=60) {
        let t = 100 * rng.random_range(0..=window / 100);
        let gt = &truths[rng.random_range(0..n_truth)];
        let pos = match gt.pos_at(t).filter(|_| rng.random_bool(0.7)) {
            Some(q) => [q[0] + dnoise.sample(rng), q[1] + dnoise.sample(rng), q[2] + dnoise.sample(rng)],
            None => [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0), rng.random_range(0.0..200.0)],
        };
        dets.push(ODet { t, pos });
    }
    OTrial { window, truths, tracks, dets }
}
