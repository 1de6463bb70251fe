//! Photon-number statistics of light interacting with a partially blockaded
//! Rydberg ensemble.
//!
//! Fock-state distributions are pushed through column-stochastic transfer
//! matrices (linear loss, filtering, and a Monte Carlo hard-sphere blockade
//! model). On top of that sit a heralded DLCZ source model, a detection-rate
//! model for write/read correlations, and estimators for noise-corrected g²(0)
//! from time-tagged click records.
//!
//! The numerical modules are generic over [`Scalar`] (`f64` and `f32`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod blockade;
pub mod clicks;
pub mod error;
pub mod fock;
pub mod pipeline;
pub mod ratemodel;
pub mod roots;
pub mod scalar;
pub mod source;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use blockade::{exact_pair_survival, BlockadeConfig, SurvivalDistribution};
pub use clicks::{ClickRecord, ClickStream, Detector, TrialCounts, Window, WindowSpec};
pub use pipeline::InputKind;

pub type FockDistribution = fock::FockDistribution<f64>;
pub type TransferMatrix = transfer::TransferMatrix<f64>;
pub type SourceModel = source::SourceModel<f64>;
pub type JointDistribution = source::JointDistribution<f64>;
pub type RateModelParams = ratemodel::RateModelParams<f64>;
pub type EfficiencyTable = ratemodel::EfficiencyTable<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type Pipeline = pipeline::Pipeline<f64>;
pub type SweepRow = pipeline::SweepRow<f64>;

/// Photon-number truncation used when none is given.
pub const DEFAULT_N_MAX: usize = 20;

/// Largest truncation the automatic constructors will pick.
pub const MAX_AUTO_N_MAX: usize = 2000;

/// Probability mass allowed beyond the truncation order.
pub const TAIL_TOL: f64 = 1e-9;
