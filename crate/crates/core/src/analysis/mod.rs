//! Data-analysis pipeline for fringe scans and Mach-Zehnder records.
//!
//! The usual flow is [`extract_phase`] on an intensity record, then
//! [`increment_sets`] at the lags of interest, then [`mean_phase_change`]
//! for the mean absolute phase change curve, from which thresholds and
//! scaling exponents are read off.

mod fringe;
mod increments;
mod phase;
mod stats;

pub use fringe::{fit_fringe, FringeFit};
pub use increments::{
    default_lag_grid, increment_sets, increment_sets_by_lag, lag_for, lag_grid_up_to,
    IncrementSets, DENSE_LAGS,
};
pub use phase::{extract_phase, SlopeBand};
pub use stats::{
    check_gaussian_relation, estimate_diffusion, fit_gaussian, fit_scaling_exponent,
    gaussian_mean_abs, gaussian_relation_deviation, mean_phase_change, tau_threshold, ExponentFit,
    GaussianFit, Histogram, HistogramGaussian, PhaseStats, PhaseWidth, MIN_GAUSSIAN_INCREMENTS,
};
