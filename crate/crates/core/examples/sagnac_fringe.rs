//! Sagnac fringe scans over several loop lengths, fitted for visibility.

use fiberphase::analysis::{estimate_diffusion, fit_fringe, PhaseWidth};
use fiberphase::interferometer::{
    sagnac_effective_sigma, simulate_fringe_scan, visibility_from_sigma, FringeScanConfig,
};
use fiberphase::noise_process::{NoiseParams, PhaseProcess};

fn main() -> fiberphase::Result<()> {
    // Night-time diffusion coefficient measured on the 71.5 km loop.
    let params = NoiseParams::from_sagnac_calibration(5.65e-4, 71.5, 0.5, 1.5)?;
    let process = PhaseProcess::new(params)?;
    let config = FringeScanConfig {
        pulses_per_point: 10_000,
        ..Default::default()
    };

    for loop_km in [36.5, 71.5, 250.0] {
        let sigma = sagnac_effective_sigma(&process, loop_km)?;
        let fit = fit_fringe(&simulate_fringe_scan(&process, loop_km, &config, 1)?)?;
        let d = estimate_diffusion(PhaseWidth::Visibility(fit.visibility), loop_km)?;
        println!(
            "{loop_km:>6} km: sigma {sigma:.4} rad, V expected {:.4}, fitted {:.4}, D {d:.3e} rad^2/km",
            visibility_from_sigma(sigma)?,
            fit.visibility
        );
    }
    Ok(())
}
