//! Low-fidelity DTI model configuration and the A/B/C strategy presets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::ClassifierSpec;
use crate::error::{invalid, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    A,
    B,
    C,
}

/// Sensor coverage. Azimuths are degrees clockwise from north.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FovConfig {
    #[serde(default)]
    pub boresight_deg: f64,
    /// Full width of the covered sector; 360 for all-round coverage.
    pub azimuth_sector_deg: f64,
    pub max_range_m: f64,
    /// `[from, to]` azimuth sectors hidden by obstacles, clockwise from `from`.
    #[serde(default)]
    pub blind_sectors: Vec<[f64; 2]>,
}

fn wrap_deg(a: f64) -> f64 {
    a.rem_euclid(360.0)
}

impl FovConfig {
    /// Whether a point at ENU offset `(e, n, u)` from the sensor is observable.
    pub fn covers(&self, e: f64, n: f64, u: f64) -> bool {
        if (e * e + n * n + u * u).sqrt() > self.max_range_m {
            return false;
        }
        if e == 0.0 && n == 0.0 {
            return true;
        }
        let az = wrap_deg(e.atan2(n).to_degrees());
        if self.azimuth_sector_deg < 360.0 {
            let off = wrap_deg(az - self.boresight_deg + 180.0) - 180.0;
            if off.abs() > self.azimuth_sector_deg / 2.0 {
                return false;
            }
        }
        !self.blind_sectors.iter().any(|&[from, to]| wrap_deg(az - from) <= wrap_deg(to - from))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtiModelConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    pub fov: FovConfig,
    pub p_detect: f64,
    pub scan_period_s: f64,
    pub pos_noise_sigma_m: f64,
    /// `[M, N]`: confirm after M hits within N scans.
    pub track_m_of_n: [u32; 2],
    pub track_drop_prob: f64,
    pub track_coast_s: f64,
    /// Association gate of the tracker around the predicted position.
    pub track_gate_m: f64,
    pub classifier: ClassifierSpec,
}

impl DtiModelConfig {
    /// Preset parameters. These are illustrative operating points: all-round
    /// long range (A), a narrow short-range sector with range-limited
    /// identification (B), and a precise short-range sensor that labels
    /// everything as a drone (C).
    pub fn preset(strategy: Strategy) -> Self {
        let (name, fov, p_detect, sigma, m_of_n, drop, classifier) = match strategy {
            Strategy::A => ("strategy_a", (360.0, 2000.0), 0.9, 5.0, [2, 3], 0.01, ClassifierSpec::named("perfect")),
            Strategy::B => {
                ("strategy_b", (120.0, 1000.0), 0.8, 10.0, [3, 5], 0.05, ClassifierSpec::range_threshold(500.0))
            }
            Strategy::C => {
                ("strategy_c", (360.0, 500.0), 0.95, 2.0, [2, 3], 0.0, ClassifierSpec::named("always_positive"))
            }
        };
        DtiModelConfig {
            name: name.into(),
            strategy: Some(strategy),
            fov: FovConfig { boresight_deg: 0.0, azimuth_sector_deg: fov.0, max_range_m: fov.1, blind_sectors: vec![] },
            p_detect,
            scan_period_s: 1.0,
            pos_noise_sigma_m: sigma,
            track_m_of_n: m_of_n,
            track_drop_prob: drop,
            track_coast_s: 3.0,
            track_gate_m: 60.0,
            classifier,
        }
    }

    /// Parses a model; with `"strategy"` set, omitted fields come from the preset.
    pub fn from_json(value: &Value) -> Result<Self, SimError> {
        let obj = value.as_object().ok_or_else(|| invalid("dti model must be a JSON object"))?;
        let merged = match obj.get("strategy") {
            Some(s) => {
                let strategy: Strategy =
                    serde_json::from_value(s.clone()).map_err(|e| invalid(format!("strategy: {e}")))?;
                let mut base = serde_json::to_value(DtiModelConfig::preset(strategy)).expect("serializable");
                overlay(&mut base, value);
                base
            }
            None => value.clone(),
        };
        let cfg: DtiModelConfig =
            serde_json::from_value(merged).map_err(|e| invalid(format!("dti model: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.into(), source })?;
        let v: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        DtiModelConfig::from_json(&v).map_err(|e| match e {
            SimError::ConfigInvalid(m) => invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("p_detect", self.p_detect)?;
        prob("track_drop_prob", self.track_drop_prob)?;
        let [m, n] = self.track_m_of_n;
        if !(0 < m && m <= n) {
            return Err(invalid(format!("track_m_of_n needs 0 < M <= N, got [{m}, {n}]")));
        }
        if !(self.fov.max_range_m > 0.0) {
            return Err(invalid("fov.max_range_m must be positive"));
        }
        if !(self.fov.azimuth_sector_deg > 0.0 && self.fov.azimuth_sector_deg <= 360.0) {
            return Err(invalid("fov.azimuth_sector_deg must be in (0, 360]"));
        }
        if !(self.scan_period_s > 0.0) {
            return Err(invalid("scan_period_s must be positive"));
        }
        if !(self.pos_noise_sigma_m >= 0.0 && self.track_coast_s >= 0.0 && self.track_gate_m > 0.0) {
            return Err(invalid("noise, coast time and gate must be non-negative (gate positive)"));
        }
        Ok(())
    }
}

/// Copies `top` over `base`, descending into nested objects.
fn overlay(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() && k != "classifier" => overlay(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}
