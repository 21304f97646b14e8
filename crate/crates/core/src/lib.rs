//! Heralded spin entanglement through a hot mechanical oscillator.
//!
//! Two spins share a thermal resonator. Pulsed spin control turns their
//! coupling into a resonant force proportional to the total S_z, so a pair of
//! momentum measurements separated by the interaction time tells the S_z = 0
//! subspace (which feels no force) apart from S_z = ±2. Post-selecting on a
//! small momentum change heralds an antiparallel Bell state.
//!
//! Modules:
//! - [`params`]: hardware parameters, presets and config parsing
//! - [`analytic`]: closed-form fidelity, rates, optimal time and scaling
//! - [`mech_sim`]: phase-space simulator and protocol Monte Carlo
//! - [`estimator`]: Kalman filtering of interferometric resonator readout
//! - [`inhomogeneity`]: tolerance to unequal spin couplings, echo variant
//! - [`gate_budget`]: error budget of a teleported nuclear CNOT
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `F64`
//! aliases below are what most callers want.

// `!(x > 0)` guards are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod gate_budget;
pub mod inhomogeneity;
pub mod linalg;
pub mod mech_sim;
pub mod optimize;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod table;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SystemParamsF64 = params::SystemParams<f64>;
pub type SystemParamsF32 = params::SystemParams<f32>;
pub type MeasurementParamsF64 = params::MeasurementParams<f64>;
pub type MeasurementParamsF32 = params::MeasurementParams<f32>;
pub type ProtocolConfigF64 = params::ProtocolConfig<f64>;
pub type ThresholdF64 = params::Threshold<f64>;
pub type AnalyticReportF64 = analytic::AnalyticReport<f64>;
pub type GaussianStateF64 = mech_sim::GaussianState<f64>;
pub type MonteCarloSummaryF64 = mech_sim::MonteCarloSummary<f64>;
pub type FilterModelF64 = estimator::FilterModel<f64>;
pub type InhomogeneityBudgetF64 = inhomogeneity::InhomogeneityBudget<f64>;
pub type AncillaryErrorsF64 = gate_budget::AncillaryErrors<f64>;
