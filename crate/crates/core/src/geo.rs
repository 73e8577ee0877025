//! Coordinate transformation, time-window filtering and area-of-interest
//! selection.
//!
//! Geodetic coordinates are WGS-84. The local frame is East-North-Up on the
//! tangent plane at the trial origin, which is the DTI sensor location.

use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::interval::{Interval, IntervalSet};
use crate::model::{Detection, GroundTruthTrajectory, SensorPose, Track, Vec3};

mod wgs84 {
    pub const A: f64 = 6_378_137.0;
    pub const F: f64 = 1.0 / 298.257_223_563;
    pub const E2: f64 = F * (2.0 - F);
}

/// AoI boundary crossings are bracketed down to this width.
pub const CROSSING_TOLERANCE_S: f64 = 1e-6;

/// A WGS-84 position in degrees and meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat: f64,
    pub lon: f64,
    pub alt_m: f64,
}

impl Geodetic {
    pub fn new(lat: f64, lon: f64, alt_m: f64) -> Self {
        Geodetic { lat, lon, alt_m }
    }

    fn validate(&self) -> Result<(), GeoError> {
        let ok = self.lat.is_finite()
            && self.lon.is_finite()
            && self.alt_m.is_finite()
            && self.lat.abs() <= 90.0
            && self.lon.abs() <= 180.0;
        if ok {
            Ok(())
        } else {
            Err(GeoError::InvalidCoordinate { lat: self.lat, lon: self.lon })
        }
    }
}

/// Latitude/longitude pair used in AoI definitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

pub fn geodetic_to_ecef(g: &Geodetic) -> Vec3 {
    let (slat, clat) = g.lat.to_radians().sin_cos();
    let (slon, clon) = g.lon.to_radians().sin_cos();
    let n = wgs84::A / (1.0 - wgs84::E2 * slat * slat).sqrt();
    Vec3::new(
        (n + g.alt_m) * clat * clon,
        (n + g.alt_m) * clat * slon,
        (n * (1.0 - wgs84::E2) + g.alt_m) * slat,
    )
}

pub fn ecef_to_geodetic(p: &Vec3) -> Geodetic {
    let lon = p.y.atan2(p.x);
    let rho = p.x.hypot(p.y);
    let mut lat = p.z.atan2(rho * (1.0 - wgs84::E2));
    let mut alt = 0.0;
    for _ in 0..12 {
        let s = lat.sin();
        let n = wgs84::A / (1.0 - wgs84::E2 * s * s).sqrt();
        alt = if lat.cos().abs() > 1e-9 { rho / lat.cos() - n } else { p.z.abs() - n * (1.0 - wgs84::E2) };
        lat = p.z.atan2(rho * (1.0 - wgs84::E2 * n / (n + alt)));
    }
    Geodetic { lat: lat.to_degrees(), lon: lon.to_degrees(), alt_m: alt }
}

/// Rows of the ECEF→ENU rotation at `origin`.
fn enu_basis(origin: &Geodetic) -> [Vec3; 3] {
    let (slat, clat) = origin.lat.to_radians().sin_cos();
    let (slon, clon) = origin.lon.to_radians().sin_cos();
    [
        Vec3::new(-slon, clon, 0.0),
        Vec3::new(-slat * clon, -slat * slon, clat),
        Vec3::new(clat * clon, clat * slon, slat),
    ]
}

/// East-North-Up meters of `point` in the tangent plane at `origin`.
pub fn geodetic_to_enu(point: &Geodetic, origin: &Geodetic) -> Result<Vec3, GeoError> {
    point.validate()?;
    origin.validate()?;
    let d = geodetic_to_ecef(point) - geodetic_to_ecef(origin);
    let [e, n, u] = enu_basis(origin);
    Ok(Vec3::new(e.dot(&d), n.dot(&d), u.dot(&d)))
}

/// Inverse of [`geodetic_to_enu`].
pub fn enu_to_geodetic(enu: &Vec3, origin: &Geodetic) -> Result<Geodetic, GeoError> {
    origin.validate()?;
    let [e, n, u] = enu_basis(origin);
    let ecef = geodetic_to_ecef(origin) + e * enu.x + n * enu.y + u * enu.z;
    Ok(ecef_to_geodetic(&ecef))
}

/// Geodetic AoI as written in `trial.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum AoiSpec {
    Circle {
        center: LatLon,
        radius_m: f64,
        alt_min_m: f64,
        alt_max_m: f64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        aoi_ignore_altitude: bool,
    },
    Polygon {
        vertices: Vec<LatLon>,
        alt_min_m: f64,
        alt_max_m: f64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        aoi_ignore_altitude: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AoiShape {
    Circle { center: [f64; 2], radius_m: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Area of interest in the local frame. Altitude bounds are on the Up axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaOfInterest {
    pub shape: AoiShape,
    pub up_min_m: f64,
    pub up_max_m: f64,
    pub ignore_altitude: bool,
}

impl AreaOfInterest {
    pub fn circle(center: [f64; 2], radius_m: f64, up_min_m: f64, up_max_m: f64) -> Result<Self, GeoError> {
        let aoi = AreaOfInterest {
            shape: AoiShape::Circle { center, radius_m },
            up_min_m,
            up_max_m,
            ignore_altitude: false,
        };
        aoi.validate()?;
        Ok(aoi)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, up_min_m: f64, up_max_m: f64) -> Result<Self, GeoError> {
        let aoi = AreaOfInterest { shape: AoiShape::Polygon { vertices }, up_min_m, up_max_m, ignore_altitude: false };
        aoi.validate()?;
        Ok(aoi)
    }

    /// An AoI that contains every point.
    pub fn everywhere() -> Self {
        AreaOfInterest {
            shape: AoiShape::Circle { center: [0.0, 0.0], radius_m: f64::INFINITY },
            up_min_m: f64::NEG_INFINITY,
            up_max_m: f64::INFINITY,
            ignore_altitude: true,
        }
    }

    pub fn ignoring_altitude(mut self, yes: bool) -> Self {
        self.ignore_altitude = yes;
        self
    }

    /// Converts the geodetic description into the frame centered at `origin`.
    pub fn from_spec(spec: &AoiSpec, origin: &Geodetic) -> Result<Self, GeoError> {
        let to_en = |ll: &LatLon| -> Result<[f64; 2], GeoError> {
            let p = geodetic_to_enu(&Geodetic::new(ll.lat, ll.lon, origin.alt_m), origin)?;
            Ok([p.x, p.y])
        };
        let aoi = match spec {
            AoiSpec::Circle { center, radius_m, alt_min_m, alt_max_m, aoi_ignore_altitude } => AreaOfInterest {
                shape: AoiShape::Circle { center: to_en(center)?, radius_m: *radius_m },
                up_min_m: alt_min_m - origin.alt_m,
                up_max_m: alt_max_m - origin.alt_m,
                ignore_altitude: *aoi_ignore_altitude,
            },
            AoiSpec::Polygon { vertices, alt_min_m, alt_max_m, aoi_ignore_altitude } => AreaOfInterest {
                shape: AoiShape::Polygon { vertices: vertices.iter().map(to_en).collect::<Result<_, _>>()? },
                up_min_m: alt_min_m - origin.alt_m,
                up_max_m: alt_max_m - origin.alt_m,
                ignore_altitude: *aoi_ignore_altitude,
            },
        };
        aoi.validate()?;
        Ok(aoi)
    }

    /// Geodetic description of this AoI relative to `origin`.
    pub fn to_spec(&self, origin: &Geodetic) -> Result<AoiSpec, GeoError> {
        let to_ll = |p: &[f64; 2]| -> Result<LatLon, GeoError> {
            let g = enu_to_geodetic(&Vec3::new(p[0], p[1], 0.0), origin)?;
            Ok(LatLon { lat: g.lat, lon: g.lon })
        };
        let alt_min_m = self.up_min_m + origin.alt_m;
        let alt_max_m = self.up_max_m + origin.alt_m;
        Ok(match &self.shape {
            AoiShape::Circle { center, radius_m } => AoiSpec::Circle {
                center: to_ll(center)?,
                radius_m: *radius_m,
                alt_min_m,
                alt_max_m,
                aoi_ignore_altitude: self.ignore_altitude,
            },
            AoiShape::Polygon { vertices } => AoiSpec::Polygon {
                vertices: vertices.iter().map(to_ll).collect::<Result<_, _>>()?,
                alt_min_m,
                alt_max_m,
                aoi_ignore_altitude: self.ignore_altitude,
            },
        })
    }

    fn validate(&self) -> Result<(), GeoError> {
        if !self.ignore_altitude && !(self.up_min_m < self.up_max_m) {
            return Err(GeoError::InvalidAoi(format!(
                "altitude bounds [{}, {}] are empty",
                self.up_min_m, self.up_max_m
            )));
        }
        match &self.shape {
            AoiShape::Circle { center, radius_m } => {
                if !(*radius_m > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(GeoError::InvalidAoi(format!("circle radius {radius_m} must be positive")));
                }
            }
            AoiShape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(GeoError::InvalidAoi("polygon needs at least 3 vertices".into()));
                }
                if polygon_area(vertices).abs() <= f64::EPSILON {
                    return Err(GeoError::InvalidAoi("polygon has zero area".into()));
                }
                if polygon_self_intersects(vertices) {
                    return Err(GeoError::InvalidAoi("polygon is self-intersecting".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        if !self.ignore_altitude && (p.z < self.up_min_m || p.z > self.up_max_m) {
            return false;
        }
        match &self.shape {
            AoiShape::Circle { center, radius_m } => (p.x - center[0]).hypot(p.y - center[1]) <= *radius_m,
            AoiShape::Polygon { vertices } => point_in_polygon([p.x, p.y], vertices),
        }
    }
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>() / 2.0
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn polygon_self_intersects(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Even-odd ray casting.
fn point_in_polygon(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// A trial after projection into the local frame.
#[derive(Debug, Clone)]
pub struct EnuTrial {
    pub truths: Vec<GroundTruthTrajectory>,
    pub detections: Vec<Detection>,
    pub tracks: Vec<Track>,
    pub sensor: SensorPose,
}

/// Record of a ground truth removed by [`clip_to_window_and_aoi`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedTruth {
    pub object_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ClippedTrial {
    pub trial: EnuTrial,
    pub window: Interval,
    pub dropped: Vec<DroppedTruth>,
}

/// Times at which the interpolated trajectory lies inside `aoi` within
/// `window`. Boundary crossings are located by bisection between samples.
pub fn aoi_presence(truth: &GroundTruthTrajectory, window: Interval, aoi: &AreaOfInterest) -> IntervalSet {
    let (first, last) = truth.span();
    let lo = window.start.max(first);
    let hi = window.end.min(last);
    if lo > hi {
        return IntervalSet::empty();
    }
    let inside = |t: f64| truth.position_at(t).is_some_and(|p| aoi.contains(&p));

    let mut times = vec![lo];
    times.extend(truth.samples().iter().map(|s| s.t).filter(|&t| t > lo && t < hi));
    if hi > lo {
        times.push(hi);
    }

    let mut out = Vec::new();
    let mut state = inside(lo);
    let mut open = state.then_some(lo);
    for w in times.windows(2) {
        let next = inside(w[1]);
        if next != state {
            let t = bisect_crossing(w[0], w[1], state, &inside);
            match open.take() {
                Some(s) => out.push(Interval::new(s, t)),
                None => open = Some(t),
            }
            state = next;
        }
    }
    if let Some(s) = open {
        out.push(Interval::new(s, hi));
    }
    IntervalSet::from_intervals(out)
}

fn bisect_crossing(mut a: f64, mut b: f64, state_a: bool, inside: &impl Fn(f64) -> bool) -> f64 {
    while b - a > CROSSING_TOLERANCE_S {
        let m = 0.5 * (a + b);
        if inside(m) == state_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Applies the trial time window and AoI.
///
/// Detections and track samples outside the window are removed (tracks left
/// without samples disappear). Each truth gets its AoI presence; truths that
/// are never inside the AoI during the window are dropped and reported.
pub fn clip_to_window_and_aoi(
    trial: EnuTrial,
    window: Interval,
    aoi: &AreaOfInterest,
) -> Result<ClippedTrial, GeoError> {
    if !(window.end > window.start) {
        return Err(GeoError::EmptyWindow { start: window.start, end: window.end });
    }
    let mut dropped = Vec::new();
    let truths = trial
        .truths
        .into_iter()
        .filter_map(|gt| {
            let presence = aoi_presence(&gt, window, aoi);
            if presence.is_empty() {
                dropped.push(DroppedTruth {
                    object_id: gt.object_id.clone(),
                    reason: "never inside the area of interest during the time window".into(),
                });
                None
            } else {
                Some(gt.with_presence(presence))
            }
        })
        .collect();
    let detections = trial.detections.into_iter().filter(|d| window.contains(d.t)).collect();
    let tracks = trial
        .tracks
        .into_iter()
        .filter_map(|tr| {
            let kept: Vec<_> = tr.samples().iter().filter(|s| window.contains(s.t)).cloned().collect();
            Track::new(tr.track_id.clone(), kept).ok()
        })
        .collect();
    Ok(ClippedTrial {
        trial: EnuTrial { truths, detections, tracks, sensor: trial.sensor },
        window,
        dropped,
    })
}
