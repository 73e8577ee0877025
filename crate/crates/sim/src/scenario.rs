//! Scenario description and ground-truth generation.

use std::collections::HashSet;
use std::path::Path;

use dtieval_core::geo::{AreaOfInterest, Geodetic};
use dtieval_core::model::{GroundTruthTrajectory, ObjectClass, StateSample, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, SimError};
use crate::rng::{SimRng, DOMAIN_TRUTH};

/// Ground truth sampling rate.
pub const TRUTH_RATE_HZ: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SensitiveSite,
    PublicEvent,
    Border,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Neutral,
    Malicious,
}

/// AoI in the local frame centered on the sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScenarioAoi {
    Circle {
        #[serde(default)]
        center_m: [f64; 2],
        radius_m: f64,
        up_min_m: f64,
        up_max_m: f64,
        #[serde(default)]
        ignore_altitude: bool,
    },
    Polygon {
        vertices_m: Vec<[f64; 2]>,
        up_min_m: f64,
        up_max_m: f64,
        #[serde(default)]
        ignore_altitude: bool,
    },
}

impl ScenarioAoi {
    pub fn to_aoi(&self) -> Result<AreaOfInterest, SimError> {
        let aoi = match self {
            ScenarioAoi::Circle { center_m, radius_m, up_min_m, up_max_m, ignore_altitude } => {
                AreaOfInterest::circle(*center_m, *radius_m, *up_min_m, *up_max_m)
                    .map(|a| a.ignoring_altitude(*ignore_altitude))
            }
            ScenarioAoi::Polygon { vertices_m, up_min_m, up_max_m, ignore_altitude } => {
                AreaOfInterest::polygon(vertices_m.clone(), *up_min_m, *up_max_m)
                    .map(|a| a.ignoring_altitude(*ignore_altitude))
            }
        };
        aoi.map_err(|e| invalid(format!("aoi: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneConfig {
    pub id: String,
    #[serde(default = "uav")]
    pub class: ObjectClass,
    /// ENU waypoints in meters.
    pub waypoints: Vec<[f64; 3]>,
    pub speed_mps: f64,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default)]
    pub behavior: Behavior,
}

fn uav() -> ObjectClass {
    ObjectClass::Uav
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterConfig {
    #[serde(default)]
    pub bird_count: usize,
    #[serde(default = "bird_speeds")]
    pub bird_speed_range: [f64; 2],
    #[serde(default = "bird_altitudes")]
    pub bird_altitude_range: [f64; 2],
    /// Birds start uniformly inside this radius around the sensor.
    #[serde(default = "bird_radius")]
    pub bird_area_radius_m: f64,
    /// Mean false detections per second, uniformly spread over the field of view.
    #[serde(default)]
    pub spurious_detection_rate: f64,
}

fn bird_speeds() -> [f64; 2] {
    [5.0, 15.0]
}

fn bird_altitudes() -> [f64; 2] {
    [20.0, 120.0]
}

fn bird_radius() -> f64 {
    1000.0
}

impl Default for ClutterConfig {
    fn default() -> Self {
        ClutterConfig {
            bird_count: 0,
            bird_speed_range: bird_speeds(),
            bird_altitude_range: bird_altitudes(),
            bird_area_radius_m: bird_radius(),
            spurious_detection_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub category: Category,
    /// Sensor position; also the origin of the local frame.
    pub sensor: Geodetic,
    pub aoi: ScenarioAoi,
    pub duration_s: f64,
    #[serde(default)]
    pub drones: Vec<DroneConfig>,
    #[serde(default)]
    pub clutter: ClutterConfig,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.into(), source })?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(invalid(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        self.aoi.to_aoi()?;
        let mut ids = HashSet::new();
        for d in &self.drones {
            if !ids.insert(d.id.as_str()) {
                return Err(invalid(format!("duplicate drone id {:?}", d.id)));
            }
            if d.waypoints.len() < 2 {
                return Err(invalid(format!("drone {:?}: needs at least 2 waypoints", d.id)));
            }
            if !(d.speed_mps > 0.0 && d.speed_mps.is_finite()) {
                return Err(invalid(format!("drone {:?}: speed must be positive", d.id)));
            }
            if d.waypoints.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid(format!("drone {:?}: non-finite waypoint", d.id)));
            }
            if d.waypoints.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!("drone {:?}: repeated waypoint", d.id)));
            }
            if !(d.start_s >= 0.0 && d.start_s < self.duration_s) {
                return Err(invalid(format!("drone {:?}: start_s outside the scenario", d.id)));
            }
        }
        let c = &self.clutter;
        let [s0, s1] = c.bird_speed_range;
        if c.bird_count > 0 && !(s0 > 0.0 && s1 >= s0) {
            return Err(invalid("clutter.bird_speed_range must be positive and ordered"));
        }
        if c.bird_altitude_range[1] < c.bird_altitude_range[0] || !(c.bird_area_radius_m > 0.0) {
            return Err(invalid("clutter bird area is empty"));
        }
        if !(c.spurious_detection_rate >= 0.0 && c.spurious_detection_rate.is_finite()) {
            return Err(invalid("clutter.spurious_detection_rate must be non-negative"));
        }
        for k in 0..c.bird_count {
            if ids.contains(bird_id(k).as_str()) {
                return Err(invalid(format!("drone id {:?} collides with a bird id", bird_id(k))));
            }
        }
        Ok(())
    }
}

pub fn bird_id(k: usize) -> String {
    format!("bird-{:03}", k + 1)
}

fn grid_time(k: u64) -> f64 {
    k as f64 / TRUTH_RATE_HZ
}

/// Drone trajectory: constant speed along the waypoint legs, sampled at
/// 10 Hz plus every waypoint time so interpolation between samples is exact.
fn drone_truth(d: &DroneConfig, duration: f64) -> Result<GroundTruthTrajectory, SimError> {
    let wp: Vec<Vec3> = d.waypoints.iter().map(|w| Vec3::new(w[0], w[1], w[2])).collect();
    let mut arrive = vec![d.start_s];
    for w in wp.windows(2) {
        arrive.push(arrive.last().unwrap() + (w[1] - w[0]).norm() / d.speed_mps);
    }
    let end = arrive.last().unwrap().min(duration);

    let mut times: Vec<f64> = arrive.iter().copied().filter(|&t| t <= end).collect();
    times.push(end);
    let first = (d.start_s * TRUTH_RATE_HZ).ceil() as u64;
    let mut k = first;
    while grid_time(k) <= end {
        times.push(grid_time(k));
        k += 1;
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|b, a| (*b - *a).abs() < 1e-9);

    let samples = times
        .into_iter()
        .map(|t| {
            let leg = arrive.partition_point(|&a| a <= t).clamp(1, wp.len() - 1) - 1;
            let (a, b) = (wp[leg], wp[leg + 1]);
            let f = (t - arrive[leg]) / (arrive[leg + 1] - arrive[leg]);
            let dir = (b - a).normalize();
            StateSample::new(t, a + (b - a) * f).with_velocity(dir * d.speed_mps)
        })
        .collect();
    GroundTruthTrajectory::new(d.id.clone(), d.class, samples).map_err(|e| invalid(e.to_string()))
}

/// Bird trajectory: constant speed, heading performing a Gaussian random walk.
fn bird_truth(id: String, c: &ClutterConfig, duration: f64, rng: &mut SimRng) -> GroundTruthTrajectory {
    const HEADING_STEP_SIGMA_RAD: f64 = 0.05;
    let r = c.bird_area_radius_m * rng.uniform().sqrt();
    let a = rng.range(0.0, std::f64::consts::TAU);
    let up = rng.range(c.bird_altitude_range[0], c.bird_altitude_range[1]);
    let speed = rng.range(c.bird_speed_range[0], c.bird_speed_range[1]);
    let mut heading = rng.range(0.0, std::f64::consts::TAU);
    let mut p = Vec3::new(r * a.sin(), r * a.cos(), up);
    let n = (duration * TRUTH_RATE_HZ).floor() as u64;
    let mut samples = Vec::with_capacity(n as usize + 2);
    let mut last_t = 0.0;
    for k in 0..=n {
        let t = grid_time(k);
        let v = Vec3::new(heading.sin(), heading.cos(), 0.0) * speed;
        p += v * (t - last_t);
        samples.push(StateSample::new(t, p).with_velocity(v));
        last_t = t;
        heading += HEADING_STEP_SIGMA_RAD * rng.normal();
    }
    if duration - last_t > 1e-9 {
        let v = Vec3::new(heading.sin(), heading.cos(), 0.0) * speed;
        samples.push(StateSample::new(duration, p + v * (duration - last_t)).with_velocity(v));
    }
    GroundTruthTrajectory::new(id, ObjectClass::Bird, samples).expect("bird samples are increasing")
}

/// All drone trajectories (in config order) followed by the birds.
pub fn generate_truth(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<GroundTruthTrajectory>, SimError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for d in &cfg.drones {
        out.push(drone_truth(d, cfg.duration_s)?);
    }
    for k in 0..cfg.clutter.bird_count {
        let mut rng = SimRng::stream(seed, DOMAIN_TRUTH, k as u64);
        out.push(bird_truth(bird_id(k), &cfg.clutter, cfg.duration_s, &mut rng));
    }
    Ok(out)
}
