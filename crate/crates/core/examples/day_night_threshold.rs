//! Lag at which the phase drifts by 0.1 rad on the installed link, for the
//! day and night calibrations, measured through the Mach-Zehnder pipeline.

use fiberphase::analysis::{
    extract_phase, lag_grid_up_to, mean_phase_change, tau_threshold, SlopeBand,
};
use fiberphase::cli_io::{pooled_increments, Preset};
use fiberphase::interferometer::MzSetup;
use fiberphase::noise_process::PhaseProcess;

fn main() -> fiberphase::Result<()> {
    let (dt, duration) = (2e-6, 20e-3);
    let setup = MzSetup::default();
    let lags = lag_grid_up_to(1e-3, dt)?;

    for preset in [Preset::Day, Preset::Night] {
        let process = PhaseProcess::new(preset.params())?;
        let phases = process
            .sample_traces(duration, dt, 42, 50)?
            .iter()
            .map(|truth| extract_phase(&setup.render(truth)?, SlopeBand::default()))
            .collect::<fiberphase::Result<Vec<_>>>()?;
        let stats = mean_phase_change(&pooled_increments(&phases, &lags)?)?;
        println!(
            "{preset:?}: tau_0.1 = {:.0} us (process anchor {:.0} us)",
            tau_threshold(&stats, 0.1)? * 1e6,
            preset.tau_anchor() * 1e6
        );
    }
    Ok(())
}
