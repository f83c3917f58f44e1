//! Sample the phase noise process and compare empirical increment widths
//! with the calibrated power law.

use fiberphase::analysis::{increment_sets_by_lag, mean_phase_change};
use fiberphase::noise_process::{NoiseParams, PhaseProcess};

fn main() -> fiberphase::Result<()> {
    let dt = 2e-6;
    for hurst in [0.5, 0.8] {
        let process = PhaseProcess::new(NoiseParams::new(0.1418, 182.5e-6, hurst))?;
        let trace = process.sample_trace(0.1, dt, 2008)?;
        let lags = [1, 10, 91, 500];
        let stats = mean_phase_change(&increment_sets_by_lag(&trace, &lags)?)?;

        println!("H = {hurst}: {} samples", trace.len());
        println!("{:>10} {:>12} {:>12}", "tau (us)", "sample std", "sigma_at");
        for (i, tau) in stats.taus.iter().enumerate() {
            println!(
                "{:>10.1} {:>12.5} {:>12.5}",
                tau * 1e6,
                stats.sigma_per_tau[i],
                process.sigma_at(*tau)?
            );
        }
    }
    Ok(())
}
