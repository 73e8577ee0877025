//! Interval algebra over time.
//!
//! An [`IntervalSet`] is kept in canonical form: intervals sorted by start,
//! pairwise disjoint, and separated by more than [`MERGE_EPSILON_S`]. All
//! durations and time ranges used by the metric modules are computed here.
//!
//! Intervals are closed. Zero-length intervals are allowed and represent an
//! instant (for example a segment made of a single track sample); they carry
//! no duration but do take part in membership and in "earliest start" queries.

use serde::{Deserialize, Serialize};

/// Seconds since the scenario epoch.
pub type TimeStamp = f64;

/// Gaps at or below this size are closed when canonicalizing.
pub const MERGE_EPSILON_S: f64 = 1e-6;

/// A closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: TimeStamp,
    pub end: TimeStamp,
}

impl Interval {
    /// Builds an interval, swapping the bounds if given in reverse order.
    pub fn new(a: TimeStamp, b: TimeStamp) -> Self {
        debug_assert!(a.is_finite() && b.is_finite());
        if a <= b {
            Interval { start: a, end: b }
        } else {
            Interval { start: b, end: a }
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: TimeStamp) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn is_instant(&self) -> bool {
        self.end <= self.start
    }
}

/// Canonical disjoint union of closed intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl From<Vec<Interval>> for IntervalSet {
    fn from(v: Vec<Interval>) -> Self {
        IntervalSet::from_intervals(v)
    }
}

impl From<IntervalSet> for Vec<Interval> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        IntervalSet::from_intervals(iter)
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn single(start: TimeStamp, end: TimeStamp) -> Self {
        IntervalSet {
            intervals: vec![Interval::new(start, end)],
        }
    }

    /// Canonicalizes an arbitrary collection of intervals.
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        let mut v: Vec<Interval> = iter.into_iter().collect();
        v.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv.start - last.end <= MERGE_EPSILON_S => {
                    if iv.end > last.end {
                        last.end = iv.end;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Total length of all intervals, 0 for the empty set.
    pub fn duration(&self) -> f64 {
        self.intervals.iter().map(Interval::duration).fold(0.0, |a, d| a + d)
    }

    pub fn start(&self) -> Option<TimeStamp> {
        self.intervals.first().map(|iv| iv.start)
    }

    pub fn end(&self) -> Option<TimeStamp> {
        self.intervals.last().map(|iv| iv.end)
    }

    /// Smallest interval containing the whole set.
    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.start()?, self.end()?))
    }

    pub fn contains(&self, t: TimeStamp) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end < t);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(t))
    }

    /// The interval of this set that contains `t`, if any.
    pub fn interval_at(&self, t: TimeStamp) -> Option<Interval> {
        let idx = self.intervals.partition_point(|iv| iv.end < t);
        self.intervals.get(idx).filter(|iv| iv.contains(t)).copied()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = a[i].start.max(b[j].start);
            let hi = a[i].end.min(b[j].end);
            if lo <= hi {
                out.push(Interval { start: lo, end: hi });
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Set difference `self \ other`.
    ///
    /// Boundary points shared with `other` are not kept as separate instants;
    /// a zero-length interval of `self` survives only if `other` does not
    /// contain it.
    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let b = &other.intervals;
        for iv in &self.intervals {
            if iv.is_instant() {
                if !other.contains(iv.start) {
                    out.push(*iv);
                }
                continue;
            }
            let mut cursor = iv.start;
            let first = b.partition_point(|x| x.end < iv.start);
            for cut in &b[first..] {
                if cut.start > iv.end {
                    break;
                }
                if cut.start > cursor {
                    out.push(Interval { start: cursor, end: cut.start });
                }
                cursor = cursor.max(cut.end);
                if cursor >= iv.end {
                    break;
                }
            }
            if cursor < iv.end {
                out.push(Interval { start: cursor, end: iv.end });
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Restricts the set to `[start, end]`.
    pub fn clip(&self, start: TimeStamp, end: TimeStamp) -> IntervalSet {
        self.intersect(&IntervalSet::single(start, end))
    }

    /// Drops zero-length members.
    pub fn without_instants(&self) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().filter(|iv| !iv.is_instant()).copied().collect(),
        }
    }
}

/// Union of many sets.
pub fn union_all<'a, I: IntoIterator<Item = &'a IntervalSet>>(sets: I) -> IntervalSet {
    IntervalSet::from_intervals(sets.into_iter().flat_map(|s| s.intervals.iter().copied()))
}
