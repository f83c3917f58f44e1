//! Mach-Zehnder record to mean phase change: simulate intensity, recover
//! the phase on the slopes of the fringe, and compare with ground truth.

use fiberphase::analysis::{
    check_gaussian_relation, extract_phase, increment_sets, mean_phase_change, SlopeBand,
};
use fiberphase::interferometer::{simulate_mz_with_truth, MzSetup};
use fiberphase::noise_process::{NoiseParams, PhaseProcess};

fn main() -> fiberphase::Result<()> {
    let process = PhaseProcess::new(NoiseParams::new(0.1418, 182.5e-6, 0.5))?;
    let (intensity, truth) = simulate_mz_with_truth(&process, 20e-3, 2e-6, &MzSetup::default(), 7)?;

    let phase = extract_phase(&intensity, SlopeBand::default())?;
    println!(
        "{} of {} samples on the slopes, in {} segments",
        phase.valid_len(),
        phase.len(),
        phase.segments.len()
    );

    let taus = [20e-6, 50e-6, 100e-6, 182e-6, 300e-6];
    let recovered = mean_phase_change(&increment_sets(&phase, &taus)?)?;
    let direct = mean_phase_change(&increment_sets(&truth, &taus)?)?;
    println!(
        "{:>10} {:>12} {:>12} {:>10}",
        "tau (us)", "recovered", "truth", "gauss dev"
    );
    for (i, tau) in taus.iter().enumerate() {
        println!(
            "{:>10.0} {:>12.5} {:>12.5} {:>9.2}%",
            tau * 1e6,
            recovered.mean_abs_change[i],
            direct.mean_abs_change[i],
            100.0 * check_gaussian_relation(&recovered, *tau)?
        );
    }
    Ok(())
}
