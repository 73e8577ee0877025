//! Scenario simulator and low-fidelity DTI models.
//!
//! [`scenario`] generates seeded ground truth (waypoint drones and
//! random-walk birds), [`dti`] runs a parametric sensor and M-of-N tracker on
//! it, and [`suite`] evaluates many seeded runs through the full evaluation
//! pipeline. All randomness comes from [`rng`].

pub mod classifier;
pub mod dti;
pub mod error;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod suite;
pub mod tracker;

pub use dti::{run_dti_model, simulate, SimTrial};
pub use error::SimError;
pub use model::{DtiModelConfig, Strategy};
pub use scenario::{generate_truth, ScenarioConfig};
