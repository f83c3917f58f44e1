//! Write a simulated record to CSV, read it back, analyze it and store a
//! JSON report next to it.

use fiberphase::analysis::{extract_phase, increment_sets, mean_phase_change, SlopeBand};
use fiberphase::cli_io::{
    read_intensity_trace, write_dphi, write_report, write_trace, InputProvenance, Preset,
    ReportDocument, TraceRecord,
};
use fiberphase::interferometer::{simulate_mz_trace, MzSetup};
use fiberphase::noise_process::PhaseProcess;
use serde_json::json;

fn main() -> fiberphase::Result<()> {
    let dir = std::env::temp_dir().join("fiberphase-example");
    std::fs::create_dir_all(&dir).map_err(|e| fiberphase::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mz_path = dir.join("mz.csv");

    let process = PhaseProcess::new(Preset::Day.params())?;
    let trace = simulate_mz_trace(&process, 5e-3, 2e-6, &MzSetup::default(), 5)?;
    write_trace(&mz_path, &TraceRecord::Intensity(trace.clone()))?;

    let back = read_intensity_trace(&mz_path)?;
    assert_eq!(back, trace, "CSV round trip is exact");

    let phase = extract_phase(&back, SlopeBand::default())?;
    let stats = mean_phase_change(&increment_sets(&phase, &[50e-6, 100e-6, 200e-6])?)?;
    write_dphi(dir.join("dphi.csv"), &stats)?;

    let mut report = ReportDocument::new(json!({ "preset": Preset::Day, "seed": 5 }));
    report.inputs.push(InputProvenance::of(&mz_path)?);
    report.add_result("phase_stats", &stats)?;
    write_report(dir.join("report.json"), &report)?;

    println!("wrote {}", dir.display());
    println!(
        "{}",
        report
            .to_json()?
            .lines()
            .take(12)
            .collect::<Vec<_>>()
            .join("\n")
    );
    Ok(())
}
