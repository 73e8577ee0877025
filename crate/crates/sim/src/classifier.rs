//! Identification strategies of the simulated DTI system.

use dtieval_core::model::ObjectClass;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{invalid, SimError};

/// What the classifier gets to see about one detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Class of the object that caused the detection; `None` for false alarms.
    pub origin: Option<ObjectClass>,
    pub range_m: f64,
}

pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;
    /// Label and confidence, or `None` when no label is issued.
    fn classify(&self, obs: &Observation) -> Option<(String, f64)>;
}

/// Labels every detection with its true class; false alarms become `other`.
pub struct Perfect;

impl Classifier for Perfect {
    fn name(&self) -> &str {
        "perfect"
    }

    fn classify(&self, obs: &Observation) -> Option<(String, f64)> {
        let class = obs.origin.unwrap_or(ObjectClass::Other);
        Some((class.as_str().to_string(), 1.0))
    }
}

/// Labels everything as a drone.
pub struct AlwaysPositive;

impl Classifier for AlwaysPositive {
    fn name(&self) -> &str {
        "always_positive"
    }

    fn classify(&self, _: &Observation) -> Option<(String, f64)> {
        Some((ObjectClass::Uav.as_str().to_string(), 0.5))
    }
}

/// Correct labels within `range_m`, no label beyond.
pub struct RangeThreshold {
    pub range_m: f64,
}

impl Classifier for RangeThreshold {
    fn name(&self) -> &str {
        "range_threshold"
    }

    fn classify(&self, obs: &Observation) -> Option<(String, f64)> {
        (obs.range_m <= self.range_m).then(|| (obs.origin.unwrap_or(ObjectClass::Other).as_str().to_string(), 0.8))
    }
}

/// Classifier selection in `dti_model.json`: `{"kind": name, ...params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl ClassifierSpec {
    pub fn named(kind: &str) -> Self {
        ClassifierSpec { kind: kind.into(), params: Map::new() }
    }

    pub fn range_threshold(range_m: f64) -> Self {
        let mut params = Map::new();
        params.insert("range_m".into(), range_m.into());
        ClassifierSpec { kind: "range_threshold".into(), params }
    }
}

type Factory = fn(&Map<String, Value>) -> Result<Box<dyn Classifier>, SimError>;

/// Classifier factories keyed by name.
pub struct ClassifierRegistry {
    entries: Vec<(&'static str, Factory)>,
}

fn no_params(kind: &str, p: &Map<String, Value>) -> Result<(), SimError> {
    match p.keys().next() {
        Some(k) => Err(invalid(format!("classifier {kind}: unknown parameter {k:?}"))),
        None => Ok(()),
    }
}

impl ClassifierRegistry {
    pub fn empty() -> Self {
        ClassifierRegistry { entries: Vec::new() }
    }

    pub fn with_defaults() -> Self {
        let mut r = ClassifierRegistry::empty();
        r.register("perfect", |p| {
            no_params("perfect", p)?;
            Ok(Box::new(Perfect))
        });
        r.register("always_positive", |p| {
            no_params("always_positive", p)?;
            Ok(Box::new(AlwaysPositive))
        });
        r.register("range_threshold", |p| {
            let range_m = p
                .get("range_m")
                .and_then(Value::as_f64)
                .filter(|r| *r > 0.0)
                .ok_or_else(|| invalid("classifier range_threshold: needs a positive range_m"))?;
            if let Some(k) = p.keys().find(|k| *k != "range_m") {
                return Err(invalid(format!("classifier range_threshold: unknown parameter {k:?}")));
            }
            Ok(Box::new(RangeThreshold { range_m }))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, spec: &ClassifierSpec) -> Result<Box<dyn Classifier>, SimError> {
        let (_, f) = self
            .entries
            .iter()
            .find(|(n, _)| *n == spec.kind)
            .ok_or_else(|| invalid(format!("unknown classifier {:?}; known: {:?}", spec.kind, self.names())))?;
        f(&spec.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(origin: Option<ObjectClass>, range_m: f64) -> Observation {
        Observation { origin, range_m }
    }

    #[test]
    fn built_in_labels() {
        let r = ClassifierRegistry::with_defaults();
        let p = r.build(&ClassifierSpec::named("perfect")).unwrap();
        assert_eq!(p.classify(&obs(Some(ObjectClass::Bird), 10.0)).unwrap().0, "bird");
        assert_eq!(p.classify(&obs(None, 10.0)).unwrap().0, "other");
        let a = r.build(&ClassifierSpec::named("always_positive")).unwrap();
        assert_eq!(a.classify(&obs(Some(ObjectClass::Bird), 10.0)).unwrap().0, "uav");
        let t = r.build(&ClassifierSpec::range_threshold(500.0)).unwrap();
        assert_eq!(t.classify(&obs(Some(ObjectClass::Uav), 400.0)).unwrap().0, "uav");
        assert!(t.classify(&obs(Some(ObjectClass::Uav), 600.0)).is_none());
    }

    #[test]
    fn bad_specs() {
        let r = ClassifierRegistry::with_defaults();
        assert!(r.build(&ClassifierSpec::named("oracle")).is_err());
        assert!(r.build(&ClassifierSpec::named("range_threshold")).is_err());
        let mut s = ClassifierSpec::named("perfect");
        s.params.insert("x".into(), 1.into());
        assert!(r.build(&s).is_err());
    }
}
