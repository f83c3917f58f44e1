//! Recover the power-law exponent of the mean phase change from synthetic
//! traces across the range seen in installed fiber.

use fiberphase::analysis::{
    fit_scaling_exponent, increment_sets_by_lag, lag_grid_up_to, mean_phase_change,
};
use fiberphase::noise_process::{NoiseParams, PhaseProcess};

fn main() -> fiberphase::Result<()> {
    let dt = 1e-6;
    let n = 1 << 16;
    for hurst in [0.5, 0.7, 0.75, 0.8, 0.9] {
        let process = PhaseProcess::new(NoiseParams::new(0.05, dt, hurst))?;
        let trace = process.sample_trace((n - 1) as f64 * dt, dt, 11)?;
        let lags = lag_grid_up_to(1e-3, dt)?;
        let stats = mean_phase_change(&increment_sets_by_lag(&trace, &lags)?)?;
        let fit = fit_scaling_exponent(&stats, dt, 1e-3)?;
        println!(
            "H = {hurst:.2}: fitted x = {:.4} over {} lags",
            fit.exponent, fit.n_lags
        );
    }
    Ok(())
}
