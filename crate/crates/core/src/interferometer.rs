//! Forward models of the Sagnac and Mach-Zehnder interferometers.
//!
//! A Sagnac loop only sees phase noise that changes while the two
//! counterpropagating pulses are in flight. Its effective phase error is the
//! process increment over half the loop travel time, which is also the mean
//! counterpropagation delay averaged over position along the loop. A
//! Mach-Zehnder records the full phase difference `phi(t)` as an intensity.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::noise_process::{travel_time, PhaseProcess, PhaseTrace};
use crate::rng::stream_rng;

/// Fringe visibility left by gaussian phase noise of width `sigma`.
pub fn visibility_from_sigma(sigma: f64) -> Result<f64> {
    ensure_finite("sigma", sigma)?;
    if sigma < 0.0 {
        return Err(Error::domain("sigma", format!("must be >= 0, got {sigma}")));
    }
    Ok((-sigma * sigma / 2.0).exp())
}

/// Inverse of [`visibility_from_sigma`].
pub fn sigma_from_visibility(visibility: f64) -> Result<f64> {
    ensure_finite("visibility", visibility)?;
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::domain(
            "visibility",
            format!("must lie in (0, 1], got {visibility}"),
        ));
    }
    Ok((-2.0 * visibility.ln()).sqrt())
}

/// Phase error seen by a Sagnac loop of `loop_km` built on `process`.
pub fn sagnac_effective_sigma(process: &PhaseProcess, loop_km: f64) -> Result<f64> {
    ensure_finite("loop_km", loop_km)?;
    if loop_km <= 0.0 {
        return Err(Error::domain(
            "loop_km",
            format!("must be > 0, got {loop_km}"),
        ));
    }
    process.sigma_at(travel_time(loop_km, process.params().group_index) / 2.0)
}

/// Pulse areas recorded while the applied phase is scanned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub applied_phase: Vec<f64>,
    pub pulse_area: Vec<f64>,
    /// Constant detector offset contained in every pulse area.
    pub detector_noise: f64,
    /// Mean full intensity.
    pub i0: f64,
}

impl FringeScan {
    pub fn validate(&self) -> Result<()> {
        if self.applied_phase.len() != self.pulse_area.len() {
            return Err(Error::domain(
                "pulse_area",
                format!(
                    "{} pulse areas for {} phase settings",
                    self.pulse_area.len(),
                    self.applied_phase.len()
                ),
            ));
        }
        if self.applied_phase.len() < 4 {
            return Err(Error::domain(
                "n_points",
                format!(
                    "a fringe scan needs at least 4 points, got {}",
                    self.applied_phase.len()
                ),
            ));
        }
        ensure_finite("detector_noise", self.detector_noise)?;
        ensure_finite("i0", self.i0)?;
        for (&phase, &area) in self.applied_phase.iter().zip(&self.pulse_area) {
            ensure_finite("applied_phase", phase)?;
            ensure_finite("pulse_area", area)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.applied_phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.applied_phase.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeScanConfig {
    pub n_points: usize,
    pub pulses_per_point: usize,
    pub detector_noise: f64,
    pub i0: f64,
    /// Whole fringes covered by the scan.
    pub fringes: usize,
}

impl Default for FringeScanConfig {
    fn default() -> Self {
        Self {
            n_points: 50,
            pulses_per_point: 1000,
            detector_noise: 0.0,
            i0: 1.0,
            fringes: 1,
        }
    }
}

impl FringeScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 4 {
            return Err(Error::domain(
                "n_points",
                format!("must be >= 4, got {}", self.n_points),
            ));
        }
        if self.pulses_per_point < 1 {
            return Err(Error::domain("pulses_per_point", "must be >= 1"));
        }
        if self.fringes < 1 {
            return Err(Error::domain("fringes", "must be >= 1"));
        }
        ensure_finite("detector_noise", self.detector_noise)?;
        ensure_finite("i0", self.i0)?;
        if self.detector_noise < 0.0 {
            return Err(Error::domain("detector_noise", "must be >= 0"));
        }
        if self.i0 <= 0.0 {
            return Err(Error::domain("i0", "must be > 0"));
        }
        Ok(())
    }

    /// Applied phase settings: a periodic grid over `fringes` full periods,
    /// so the scan samples every fringe uniformly.
    pub fn applied_phases(&self) -> Vec<f64> {
        let span = 2.0 * PI * self.fringes as f64;
        (0..self.n_points)
            .map(|k| span * k as f64 / self.n_points as f64)
            .collect()
    }
}

/// Sagnac fringe scan for a loop of `loop_km` on `process`.
pub fn simulate_fringe_scan(
    process: &PhaseProcess,
    loop_km: f64,
    config: &FringeScanConfig,
    seed: u64,
) -> Result<FringeScan> {
    let sigma = sagnac_effective_sigma(process, loop_km)?;
    simulate_fringe_scan_with_sigma(sigma, config, seed)
}

/// Fringe scan where each pulse carries an independent phase error drawn
/// from `N(0, sigma^2)`. Scan point `k` uses sub-stream `k` of `seed`.
pub fn simulate_fringe_scan_with_sigma(
    sigma: f64,
    config: &FringeScanConfig,
    seed: u64,
) -> Result<FringeScan> {
    config.validate()?;
    ensure_finite("sigma", sigma)?;
    if sigma < 0.0 {
        return Err(Error::domain("sigma", format!("must be >= 0, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain("sigma", e.to_string()))?;
    let applied_phase = config.applied_phases();
    let half = config.i0 / 2.0;

    let pulse_area = applied_phase
        .par_iter()
        .enumerate()
        .map(|(k, &phase)| {
            let mut rng = stream_rng(seed, k as u64);
            let total: f64 = (0..config.pulses_per_point)
                .map(|_| {
                    let jitter = if sigma > 0.0 {
                        normal.sample(&mut rng)
                    } else {
                        0.0
                    };
                    half * (1.0 + (phase + jitter).cos())
                })
                .sum();
            total / config.pulses_per_point as f64 + config.detector_noise
        })
        .collect();

    Ok(FringeScan {
        applied_phase,
        pulse_area,
        detector_noise: config.detector_noise,
        i0: config.i0,
    })
}

/// Mach-Zehnder detector record with its calibration extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub i_max: f64,
    pub i_min: f64,
}

impl IntensityTrace {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("t0", self.t0)?;
        ensure_finite("dt", self.dt)?;
        ensure_finite("i_max", self.i_max)?;
        ensure_finite("i_min", self.i_min)?;
        if self.dt <= 0.0 {
            return Err(Error::domain("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.i_max <= self.i_min {
            return Err(Error::domain(
                "i_max",
                format!("must exceed i_min ({}), got {}", self.i_min, self.i_max),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MzSetup {
    pub i_max: f64,
    pub i_min: f64,
    /// Static phase offset between the arms (rad).
    pub phi0: f64,
}

impl Default for MzSetup {
    fn default() -> Self {
        Self {
            i_max: 1.0,
            i_min: 0.0,
            phi0: PI / 2.0,
        }
    }
}

impl MzSetup {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("i_max", self.i_max)?;
        ensure_finite("i_min", self.i_min)?;
        ensure_finite("phi0", self.phi0)?;
        if self.i_max <= self.i_min {
            return Err(Error::domain(
                "i_max",
                format!("must exceed i_min ({}), got {}", self.i_min, self.i_max),
            ));
        }
        Ok(())
    }

    /// Detector intensity for arm phase difference `phase` (noiseless detector).
    pub fn intensity(&self, phase: f64) -> f64 {
        let w = (1.0 + (self.phi0 + phase).cos()) / 2.0;
        (self.i_max * w + self.i_min * (1.0 - w)).clamp(self.i_min, self.i_max)
    }

    /// Intensity record produced by a known phase trace.
    pub fn render(&self, phase: &PhaseTrace) -> Result<IntensityTrace> {
        self.validate()?;
        Ok(IntensityTrace {
            t0: phase.t0,
            dt: phase.dt,
            samples: phase.samples.iter().map(|&p| self.intensity(p)).collect(),
            i_max: self.i_max,
            i_min: self.i_min,
        })
    }
}

/// Mach-Zehnder intensity record driven by one realization of `process`.
pub fn simulate_mz_trace(
    process: &PhaseProcess,
    duration: f64,
    dt: f64,
    setup: &MzSetup,
    seed: u64,
) -> Result<IntensityTrace> {
    simulate_mz_with_truth(process, duration, dt, setup, seed).map(|(trace, _)| trace)
}

/// As [`simulate_mz_trace`], also returning the underlying phase realization.
pub fn simulate_mz_with_truth(
    process: &PhaseProcess,
    duration: f64,
    dt: f64,
    setup: &MzSetup,
    seed: u64,
) -> Result<(IntensityTrace, PhaseTrace)> {
    setup.validate()?;
    let phase = process.sample_trace(duration, dt, seed)?;
    let trace = setup.render(&phase)?;
    Ok((trace, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_process::NoiseParams;

    #[test]
    fn visibility_values() {
        assert_eq!(visibility_from_sigma(0.0).unwrap(), 1.0);
        assert!((visibility_from_sigma(0.36).unwrap() - 0.9373).abs() < 5e-5);
        assert!((visibility_from_sigma(0.2).unwrap() - 0.9802).abs() < 5e-5);
        assert!(visibility_from_sigma(-0.1).is_err());
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_from_visibility(1.0).unwrap(), 0.0);
        assert!((sigma_from_visibility(0.936).unwrap() - 0.3637).abs() < 5e-5);
        assert!((sigma_from_visibility(0.995).unwrap() - 0.1001).abs() < 5e-5);
        for bad in [0.0, -0.5, 1.0001, f64::NAN] {
            assert!(sigma_from_visibility(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sagnac_sigma_examples() {
        let p =
            PhaseProcess::new(NoiseParams::from_sagnac_calibration(8e-4, 250.0, 0.5, 1.5).unwrap())
                .unwrap();
        let s = sagnac_effective_sigma(&p, 250.0).unwrap();
        assert!((s - 0.2f64.sqrt()).abs() < 1e-12);

        // Night Mach-Zehnder calibration carried over to a 73 km loop.
        let mz = PhaseProcess::new(NoiseParams::new(0.1418, travel_time(36.5, 1.5), 0.5)).unwrap();
        assert!((sagnac_effective_sigma(&mz, 73.0).unwrap() - 0.1418).abs() < 1e-12);
        assert!(sagnac_effective_sigma(&mz, 0.0).is_err());
    }

    #[test]
    fn fringe_scan_shape() {
        let cfg = FringeScanConfig {
            n_points: 8,
            pulses_per_point: 3,
            ..Default::default()
        };
        let scan = simulate_fringe_scan_with_sigma(0.0, &cfg, 1).unwrap();
        assert_eq!(scan.len(), 8);
        assert_eq!(scan.applied_phase[4], PI);
        assert!((scan.pulse_area[0] - 1.0).abs() < 1e-15);
        assert!(scan.pulse_area[4].abs() < 1e-15);

        let bad = FringeScanConfig { n_points: 3, ..cfg };
        assert!(simulate_fringe_scan_with_sigma(0.1, &bad, 1).is_err());
        let bad = FringeScanConfig {
            pulses_per_point: 0,
            ..cfg
        };
        assert!(simulate_fringe_scan_with_sigma(0.1, &bad, 1).is_err());
    }

    #[test]
    fn fringe_scan_is_seed_deterministic() {
        let cfg = FringeScanConfig::default();
        let a = simulate_fringe_scan_with_sigma(0.3, &cfg, 42).unwrap();
        let b = simulate_fringe_scan_with_sigma(0.3, &cfg, 42).unwrap();
        let c = simulate_fringe_scan_with_sigma(0.3, &cfg, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn mz_constant_phase() {
        let quiet = PhaseProcess::new(NoiseParams::new(0.0, 1e-4, 0.5)).unwrap();
        let top = MzSetup {
            i_max: 2.5,
            i_min: 0.3,
            phi0: 0.0,
        };
        let t = simulate_mz_trace(&quiet, 1e-4, 1e-6, &top, 0).unwrap();
        assert!(t.samples.iter().all(|&x| x == 2.5));

        let slope = MzSetup {
            phi0: PI / 2.0,
            ..top
        };
        let t = simulate_mz_trace(&quiet, 1e-4, 1e-6, &slope, 0).unwrap();
        assert!(t.samples.iter().all(|&x| (x - 1.4).abs() < 1e-15));

        let inverted = MzSetup {
            i_max: 0.0,
            i_min: 1.0,
            phi0: 0.0,
        };
        assert!(simulate_mz_trace(&quiet, 1e-4, 1e-6, &inverted, 0).is_err());
    }

    #[test]
    fn mz_samples_stay_within_calibration() {
        let p = PhaseProcess::new(NoiseParams::new(2.0, 1e-4, 0.5)).unwrap();
        let setup = MzSetup {
            i_max: 0.9,
            i_min: 0.1,
            phi0: 0.3,
        };
        let t = simulate_mz_trace(&p, 5e-3, 1e-6, &setup, 3).unwrap();
        assert!(t.samples.iter().all(|&x| (0.1..=0.9).contains(&x)));
    }
}
