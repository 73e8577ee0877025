//! Running the low-fidelity DTI model against generated truth.

use dtieval_core::geo::Geodetic;
use dtieval_core::ingest::{
    to_geodetic, RawDetection, RawSample, RawTrack, RawTrackSample, RawTruth, TimeValue, TrialBundle, TrialConfig,
};
use dtieval_core::model::{GroundTruthTrajectory, Track, Vec3};

use crate::classifier::{ClassifierRegistry, Observation};
use crate::error::SimError;
use crate::model::DtiModelConfig;
use crate::rng::{SimRng, DOMAIN_MODEL};
use crate::scenario::{generate_truth, ScenarioConfig};
use crate::tracker::{Plot, Tracker, TrackerParams};

/// Epoch written into simulated `trial.json` files.
pub const SIM_EPOCH: &str = "2024-01-01T00:00:00Z";
pub const SIM_SENSOR_ID: &str = "sim";

/// A detection together with the truth that caused it (if any).
#[derive(Debug, Clone, PartialEq)]
pub struct SimDetection {
    pub detection_id: String,
    pub t: f64,
    pub position: Vec3,
    pub origin: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub detections: Vec<SimDetection>,
    pub tracks: Vec<Track>,
    /// Number of track ID changes caused by drop events.
    pub drop_events: usize,
}

/// Scan times `0, T, 2T, ...` up to `duration`.
pub fn scan_times(duration: f64, period: f64) -> impl Iterator<Item = f64> {
    let n = (duration / period + 1e-9).floor() as u64;
    (0..=n).map(move |k| k as f64 * period)
}

/// Simulates the sensor and tracker.
///
/// Random draws come from three independent streams so that models differing
/// in one parameter see the same draws elsewhere: detection (one uniform and
/// three normals per existing truth per scan, drawn whether or not the truth
/// is observable), clutter (Poisson count and positions per scan), and
/// tracker drop events.
pub fn run_dti_model(
    truths: &[GroundTruthTrajectory],
    scenario: &ScenarioConfig,
    model: &DtiModelConfig,
    classifiers: &ClassifierRegistry,
    seed: u64,
) -> Result<ModelOutput, SimError> {
    model.validate()?;
    let classifier = classifiers.build(&model.classifier)?;
    let mut det_rng = SimRng::stream(seed, DOMAIN_MODEL, 0);
    let mut clutter_rng = SimRng::stream(seed, DOMAIN_MODEL, 1);
    let mut track_rng = SimRng::stream(seed, DOMAIN_MODEL, 2);
    let [m, n] = model.track_m_of_n;
    let mut tracker = Tracker::new(TrackerParams {
        m,
        n,
        gate_m: model.track_gate_m,
        coast_s: model.track_coast_s,
        drop_prob: model.track_drop_prob,
    });
    let fov = &model.fov;
    let clutter_mean = scenario.clutter.spurious_detection_rate * model.scan_period_s;

    let mut detections = Vec::new();
    for (scan, t) in scan_times(scenario.duration_s, model.scan_period_s).enumerate() {
        let mut scan_dets = Vec::new();
        for (i, gt) in truths.iter().enumerate() {
            let Some(p) = gt.position_at(t) else { continue };
            let u = det_rng.uniform();
            let noise = Vec3::new(det_rng.normal(), det_rng.normal(), det_rng.normal()) * model.pos_noise_sigma_m;
            if u < model.p_detect && fov.covers(p.x, p.y, p.z) {
                scan_dets.push((p + noise, Some(i)));
            }
        }
        for _ in 0..clutter_rng.poisson(clutter_mean) {
            let r = fov.max_range_m * clutter_rng.uniform().sqrt();
            let half = fov.azimuth_sector_deg.min(360.0) / 2.0;
            let az = (fov.boresight_deg + clutter_rng.range(-half, half)).to_radians();
            let up = clutter_rng.range(10.0, 150.0);
            scan_dets.push((Vec3::new(r * az.sin(), r * az.cos(), up), None));
        }

        let plots: Vec<Plot> = scan_dets
            .iter()
            .map(|(p, origin)| Plot {
                position: *p,
                label: classifier.classify(&Observation { origin: origin.map(|i| truths[i].class), range_m: p.norm() }),
            })
            .collect();
        tracker.scan(t, &plots, &mut track_rng);
        for (k, (p, origin)) in scan_dets.into_iter().enumerate() {
            detections.push(SimDetection { detection_id: format!("D{scan:06}-{k:03}"), t, position: p, origin });
        }
    }
    let drop_events = tracker.drop_events();
    Ok(ModelOutput { detections, tracks: tracker.finish(), drop_events })
}

/// A simulated trial in the local frame.
#[derive(Debug, Clone)]
pub struct SimTrial {
    pub scenario: ScenarioConfig,
    pub model: DtiModelConfig,
    pub seed: u64,
    pub truths: Vec<GroundTruthTrajectory>,
    pub output: ModelOutput,
}

/// Generates truth for `scenario` and runs `model` on it, both seeded from `seed`.
pub fn simulate(
    scenario: &ScenarioConfig,
    model: &DtiModelConfig,
    classifiers: &ClassifierRegistry,
    seed: u64,
) -> Result<SimTrial, SimError> {
    let truths = generate_truth(scenario, seed)?;
    let output = run_dti_model(&truths, scenario, model, classifiers, seed)?;
    Ok(SimTrial { scenario: scenario.clone(), model: model.clone(), seed, truths, output })
}

fn arr(v: Option<Vec3>) -> Option<[f64; 3]> {
    v.map(|v| [v.x, v.y, v.z])
}

impl SimTrial {
    pub fn trial_id(&self) -> String {
        format!("{}-{}-{}", self.scenario.name, self.model.name, self.seed)
    }

    /// The trial in ingest form, positions converted to geodetic.
    pub fn to_bundle(&self) -> Result<TrialBundle, SimError> {
        let origin: Geodetic = self.scenario.sensor;
        let geo = |p: &Vec3| to_geodetic(p, &origin);
        let aoi = self
            .scenario
            .aoi
            .to_aoi()?
            .to_spec(&origin)
            .map_err(|e| SimError::ConfigInvalid(format!("aoi: {e}")))?;
        let config = TrialConfig {
            trial_id: self.trial_id(),
            dti_id: self.model.name.clone(),
            epoch: SIM_EPOCH.into(),
            sensor: origin,
            aoi,
            time_window: [TimeValue::Seconds(0.0), TimeValue::Seconds(self.scenario.duration_s)],
            association: None,
            identification: None,
            tracking: None,
        };
        let ground_truths = self
            .truths
            .iter()
            .map(|gt| RawTruth {
                object_id: gt.object_id.clone(),
                class: gt.class,
                samples: gt
                    .samples()
                    .iter()
                    .map(|s| RawSample { t: s.t, geo: geo(&s.position), velocity: arr(s.velocity) })
                    .collect(),
            })
            .collect();
        let detections = self
            .output
            .detections
            .iter()
            .map(|d| RawDetection {
                detection_id: d.detection_id.clone(),
                t: d.t,
                geo: geo(&d.position),
                sensor_id: SIM_SENSOR_ID.into(),
            })
            .collect();
        let tracks = self
            .output
            .tracks
            .iter()
            .map(|tr| RawTrack {
                track_id: tr.track_id.clone(),
                samples: tr
                    .samples()
                    .iter()
                    .map(|s| RawTrackSample {
                        t: s.t,
                        geo: geo(&s.position),
                        velocity: arr(s.velocity),
                        ident: s.ident.clone(),
                        conf: s.conf,
                    })
                    .collect(),
            })
            .collect();
        Ok(TrialBundle { config, ground_truths, detections, tracks })
    }
}
