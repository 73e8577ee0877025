//! M-of-N nearest-neighbor tracker.

use dtieval_core::model::{Track, TrackSample, Vec3};

use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    pub m: u32,
    pub n: u32,
    pub gate_m: f64,
    pub coast_s: f64,
    pub drop_prob: f64,
}

/// One detection handed to the tracker with its identification result.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub position: Vec3,
    pub label: Option<(String, f64)>,
}

struct Active {
    id: String,
    samples: Vec<TrackSample>,
    /// Hit flags of the scans since creation, used until confirmation.
    hits: Vec<bool>,
    confirmed: bool,
    last_t: f64,
}

impl Active {
    /// Extrapolates with the mean velocity over the last few updates.
    fn predict(&self, t: f64) -> Vec3 {
        const VELOCITY_WINDOW: usize = 4;
        let s = &self.samples;
        let last = &s[s.len() - 1];
        let first = &s[s.len() - 1 - (s.len() - 1).min(VELOCITY_WINDOW)];
        if last.t > first.t {
            last.position + (last.position - first.position) * ((t - last.t) / (last.t - first.t))
        } else {
            last.position
        }
    }

    fn push(&mut self, t: f64, plot: &Plot) {
        let velocity = self.samples.last().map(|s| (plot.position - s.position) / (t - s.t));
        let mut s = TrackSample::new(t, plot.position);
        s.velocity = velocity;
        if let Some((label, conf)) = &plot.label {
            s = s.with_ident(label.clone());
            s.conf = Some(*conf);
        }
        self.samples.push(s);
        self.last_t = t;
    }
}

/// Tracks are confirmed once M of their first N scans had a hit and are
/// reported from their first detection on. Confirmed tracks coast without
/// updates for up to `coast_s`. Each update of a confirmed track is, with
/// probability `drop_prob`, a drop event: the track ends and a new track ID
/// continues from the current detection.
pub struct Tracker {
    params: TrackerParams,
    active: Vec<Active>,
    finished: Vec<Track>,
    next_id: u64,
    drop_events: usize,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker { params, active: Vec::new(), finished: Vec::new(), next_id: 1, drop_events: 0 }
    }

    fn new_track(&mut self, t: f64, plot: &Plot, confirmed: bool) -> Active {
        let mut a = Active {
            id: format!("T{:05}", self.next_id),
            samples: Vec::new(),
            hits: vec![true],
            confirmed: confirmed || self.params.m == 1,
            last_t: t,
        };
        self.next_id += 1;
        a.push(t, plot);
        a
    }

    fn retire(&mut self, a: Active) {
        if a.confirmed {
            self.finished.push(Track::new(a.id, a.samples).expect("track samples are increasing"));
        }
    }

    pub fn drop_events(&self) -> usize {
        self.drop_events
    }

    /// Processes one scan at time `t`. `rng` decides drop events.
    pub fn scan(&mut self, t: f64, plots: &[Plot], rng: &mut SimRng) {
        // Global nearest neighbor: closest gated pairs first.
        let mut pairs = Vec::new();
        for (ti, a) in self.active.iter().enumerate() {
            let pred = a.predict(t);
            for (pi, p) in plots.iter().enumerate() {
                let d = (p.position - pred).norm();
                if d <= self.params.gate_m {
                    pairs.push((d, ti, pi));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut track_plot = vec![None; self.active.len()];
        let mut plot_used = vec![false; plots.len()];
        for (_, ti, pi) in pairs {
            if track_plot[ti].is_none() && !plot_used[pi] {
                track_plot[ti] = Some(pi);
                plot_used[pi] = true;
            }
        }

        let mut next = Vec::with_capacity(self.active.len());
        let active = std::mem::take(&mut self.active);
        for (mut a, hit) in active.into_iter().zip(track_plot) {
            match hit {
                Some(pi) if a.confirmed => {
                    if rng.uniform() < self.params.drop_prob {
                        self.drop_events += 1;
                        self.retire(a);
                        let b = self.new_track(t, &plots[pi], true);
                        next.push(b);
                    } else {
                        a.push(t, &plots[pi]);
                        next.push(a);
                    }
                }
                Some(pi) => {
                    a.push(t, &plots[pi]);
                    a.hits.push(true);
                    if a.hits.iter().filter(|h| **h).count() >= self.params.m as usize {
                        a.confirmed = true;
                    }
                    next.push(a);
                }
                None if a.confirmed => {
                    if t - a.last_t > self.params.coast_s {
                        self.retire(a);
                    } else {
                        next.push(a);
                    }
                }
                None => {
                    a.hits.push(false);
                    let hits = a.hits.iter().filter(|h| **h).count();
                    let remaining = self.params.n as usize - a.hits.len().min(self.params.n as usize);
                    if hits + remaining >= self.params.m as usize {
                        next.push(a);
                    }
                }
            }
        }
        self.active = next;
        for (pi, p) in plots.iter().enumerate() {
            if !plot_used[pi] {
                let a = self.new_track(t, p, false);
                self.active.push(a);
            }
        }
    }

    /// All confirmed tracks, ordered by track id.
    pub fn finish(mut self) -> Vec<Track> {
        for a in std::mem::take(&mut self.active) {
            self.retire(a);
        }
        let mut out = self.finished;
        out.sort_by(|a, b| a.track_id.cmp(&b.track_id));
        out
    }
}
