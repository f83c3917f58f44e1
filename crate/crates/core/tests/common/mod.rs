#![allow(dead_code)]

use fiberphase::analysis::{
    extract_phase, lag_grid_up_to, mean_phase_change, PhaseStats, SlopeBand,
};
use fiberphase::cli_io::pooled_increments;
use fiberphase::interferometer::MzSetup;
use fiberphase::noise_process::{NoiseParams, PhaseProcess, PhaseTrace};
use rayon::prelude::*;

/// `count` Mach-Zehnder records of `params` pushed through phase extraction
/// with the default band; returns the pooled statistics up to `tau_max`.
pub fn mz_pipeline(
    params: NoiseParams,
    duration: f64,
    dt: f64,
    tau_max: f64,
    count: usize,
    seed: u64,
) -> PhaseStats {
    let process = PhaseProcess::new(params).unwrap();
    let setup = MzSetup::default();
    let phases: Vec<PhaseTrace> = process
        .sample_traces(duration, dt, seed, count)
        .unwrap()
        .par_iter()
        .filter_map(|truth| extract_phase(&setup.render(truth).unwrap(), SlopeBand::default()).ok())
        .collect();
    let lags = lag_grid_up_to(tau_max, dt).unwrap();
    mean_phase_change(&pooled_increments(&phases, &lags).unwrap()).unwrap()
}

/// Same statistics taken directly on noise realizations.
pub fn direct_stats(
    params: NoiseParams,
    duration: f64,
    dt: f64,
    tau_max: f64,
    count: usize,
    seed: u64,
) -> PhaseStats {
    let traces = PhaseProcess::new(params)
        .unwrap()
        .sample_traces(duration, dt, seed, count)
        .unwrap();
    let lags = lag_grid_up_to(tau_max, dt).unwrap();
    mean_phase_change(&pooled_increments(&traces, &lags).unwrap()).unwrap()
}
