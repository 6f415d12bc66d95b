//! Path-integral Monte Carlo for the polaron ground-state energy.
//!
//! Discretized T-periodic paths in 3-space carry the kinetic weight
//! `exp(-sum |x_{k+1} - x_k|^2 / (4 dt))` (generator `-Delta`) and the
//! retarded phonon attraction
//!
//! `A = (1/2) sum_{i,j} iint e^{-|t-s| mod T} / |x_i(t) - x_j(s)| dt ds`,
//!
//! plus, for two particles, the instantaneous Coulomb repulsion
//! `U int dt / |x_1(t) - x_2(t)|`. Sampling is Metropolis with single-slice
//! and whole-path translation moves; the ground-state energy comes from
//! coupling-constant thermodynamic integration,
//! `E(alpha) = -int_0^alpha <A>_{a} / T da`.
//!
//! The time difference is taken modulo T through the periodic image
//! `min(|t - s|, T - |t - s|)`, and `1/|x(t) - x(s)|` is capped at `1/dt`.
//! The energy estimator additionally carries the analytic short-time
//! counterterm for the `tau^{-1/2}` coincidence profile of Brownian paths
//! (see `action::short_time_correction`); the raw action of a frozen path is
//! reported without it.

pub mod action;
pub(crate) mod kernels;
pub mod blocking;
pub mod estimate;
pub mod sampler;

use serde::Serialize;
use thiserror::Error;

pub use action::{action_interaction, InteractionAction};
pub use estimate::{
    cross_validate, estimate_energy, finite_t_check, oscillator_validation, CrossCheck,
    EstimateOptions, FiniteTCheck, OscillatorCheck, PimcEstimate, PointStat,
};
pub use sampler::{sample_paths, PathEnsemble, SampleOptions, SampleStats};

#[derive(Debug, Error)]
pub enum PimcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, PimcError>;

/// Per-point diagnostics embedded in estimates and ensembles.
#[derive(Debug, Clone, Serialize)]
pub struct PointDiagnostics {
    pub acceptance_single: f64,
    pub acceptance_translation: f64,
    pub autocorrelation_time: f64,
    /// Blocking curve has not plateaued; the stderr may be optimistic.
    pub insufficient_statistics: bool,
}
