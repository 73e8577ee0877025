//! Evaluation engine for counter-UAS detection, tracking and identification
//! (DTI) systems.
//!
//! A trial is loaded from its files ([`ingest`]), projected into a local ENU
//! frame and clipped to the area of interest ([`geo`]), associated with
//! ground truth ([`association`]), measured ([`metrics`]) and finally
//! normalized and aggregated into a score tree ([`scoring`]).
//! [`pipeline::evaluate_trial`] runs the whole chain.

pub mod association;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod interval;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scoring;
