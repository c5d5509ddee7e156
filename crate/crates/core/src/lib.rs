//! Exploratory landscape analysis fingerprints for black-box benchmarks.
//!
//! The crate turns continuous benchmark problems into comparable numeric
//! fingerprints in four stages:
//!
//! 1. [`problems`] defines a suite of 24 standard benchmark functions plus
//!    HappyCat and HGbat, with deterministic per-instance translations and
//!    rotations.
//! 2. [`sampling`] draws Sobol or uniform designs inside each problem's
//!    domain and evaluates them.
//! 3. [`features`] condenses each sample into 38 landscape features
//!    (dispersion, information content, nearest-better clustering,
//!    meta-model fits, fitness distribution), aggregated over replicated
//!    designs by their median.
//! 4. [`embedding`] factorizes the resulting feature matrix with a singular
//!    value decomposition and exposes the rows in the right singular basis,
//!    where [`analysis`] computes correlation structure and [`classify`]
//!    runs cross-validated problem identification.
//!
//! All randomness flows through explicitly seeded ChaCha8 generators, so
//! every artifact (CSV, JSON, SVG) is byte-reproducible.

pub mod analysis;
pub mod classify;
pub mod embedding;
mod error;
pub mod features;
mod linalg;
pub mod problems;
pub mod sampling;

pub mod cli;

pub use error::{Error, Result};

/// Identifies one benchmark instance: a function id (1..=26) paired with an
/// instance id (1-based).
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct InstanceLabel {
    pub function_id: u32,
    pub instance_id: u32,
}

impl InstanceLabel {
    pub fn new(function_id: u32, instance_id: u32) -> Self {
        Self {
            function_id,
            instance_id,
        }
    }
}

impl std::fmt::Display for InstanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f{:02}_i{:02}", self.function_id, self.instance_id)
    }
}
