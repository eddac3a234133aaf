//! Minimum-divergence and pseudodistance estimation for continuous
//! parametric models.
//!
//! The crate covers power-divergence kernels ([`divergence`]), weighted
//! point-mass measures ([`measure`]), normal and Pareto families
//! ([`family`]), the estimator families built on them ([`estimators`]),
//! their influence functions ([`influence`]) and a contamination study
//! harness ([`simulation`]).

pub mod cli;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod family;
pub mod influence;
pub mod linalg;
pub mod measure;
pub mod simulation;
pub mod solver;

pub use divergence::{Extended, PowerIndex};
pub use error::{Error, Result};
pub use estimators::{estimate, EstimateResult, EstimatorKind, EstimatorSpec};
pub use family::{Family, Parameter};
pub use influence::{InfluenceCurve, SensitivitySummary};
pub use linalg::{Matrix, Vector};
pub use measure::Measure;
