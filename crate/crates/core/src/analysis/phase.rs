use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::interferometer::IntensityTrace;
use crate::noise_process::PhaseTrace;

/// Window of normalized intensity `u = (I - i_min) / (i_max - i_min)` kept
/// for phase extraction. Near the fringe extremes the intensity is
/// insensitive to phase, so those samples are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SlopeBand {
    fn default() -> Self {
        Self { lo: 0.2, hi: 0.8 }
    }
}

impl SlopeBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let band = Self { lo, hi };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("band_lo", self.lo)?;
        ensure_finite("band_hi", self.hi)?;
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::domain(
                "band",
                format!("need 0 <= lo < hi <= 1, got [{}, {}]", self.lo, self.hi),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }
}

/// Recovers the phase from a Mach-Zehnder intensity record.
///
/// Each maximal run of in-band samples (at least two long) becomes a
/// segment. Inside a segment the phase is `acos(2u - 1)`, so a rising
/// intensity reads as a falling phase. When a run touches a fringe extreme
/// (possible only for bands reaching 0 or 1) the phase is continued through
/// it rather than reflected. Samples outside every segment hold the bare
/// principal value and must not be used.
pub fn extract_phase(trace: &IntensityTrace, band: SlopeBand) -> Result<PhaseTrace> {
    trace.validate()?;
    band.validate()?;
    let span = trace.i_max - trace.i_min;
    let normalized: Vec<f64> = trace
        .samples
        .iter()
        .map(|&i| ((i - trace.i_min) / span).clamp(0.0, 1.0))
        .collect();

    let segments = in_band_runs(&normalized, band);
    if segments.is_empty() {
        return Err(Error::EmptySegments);
    }

    let mut phase: Vec<f64> = normalized.iter().map(|&u| principal_phase(u)).collect();
    for seg in &segments {
        unwrap_segment(&mut phase[seg.clone()]);
    }
    PhaseTrace::with_segments(trace.t0, trace.dt, phase, segments)
}

fn principal_phase(u: f64) -> f64 {
    (2.0 * u - 1.0).clamp(-1.0, 1.0).acos()
}

fn in_band_runs(normalized: &[f64], band: SlopeBand) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for (k, &u) in normalized.iter().enumerate() {
        match (band.contains(u), start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if k - s >= 2 {
                    runs.push(s..k);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if normalized.len() - s >= 2 {
            runs.push(s..normalized.len());
        }
    }
    runs
}

/// Rewrites principal values in place as a continuous phase, flipping
/// branch whenever the record leaves a branch point (0 or pi).
fn unwrap_segment(values: &mut [f64]) {
    let mut branch = 1.0;
    let mut offset = 0.0;
    let mut prev = f64::NAN;
    for v in values.iter_mut() {
        let p = *v;
        let at_branch_point = prev == 0.0 || prev == PI;
        if at_branch_point && p != prev {
            offset += 2.0 * branch * prev;
            branch = -branch;
        }
        prev = p;
        *v = offset + branch * p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::MzSetup;

    fn trace(samples: Vec<f64>) -> IntensityTrace {
        IntensityTrace {
            t0: 0.0,
            dt: 1e-6,
            samples,
            i_max: 1.0,
            i_min: 0.0,
        }
    }

    #[test]
    fn midpoint_is_quarter_wave() {
        let p = extract_phase(&trace(vec![0.5; 20]), SlopeBand::default()).unwrap();
        assert_eq!(p.segments, vec![0..20]);
        assert!(p.samples.iter().all(|&x| (x - PI / 2.0).abs() < 1e-15));
    }

    #[test]
    fn clipped_samples_are_excluded() {
        let mut s = vec![0.5; 10];
        s[3] = 1.0;
        s[4] = 1.0;
        s[8] = 0.0;
        let p = extract_phase(&trace(s), SlopeBand::default()).unwrap();
        assert_eq!(p.segments, vec![0..3, 5..8]);
    }

    #[test]
    fn singleton_runs_are_dropped() {
        let s = vec![0.5, 1.0, 0.5, 0.5, 1.0, 0.5];
        let p = extract_phase(&trace(s), SlopeBand::default()).unwrap();
        assert_eq!(p.segments, vec![2..4]);
        let err =
            extract_phase(&trace(vec![1.0, 0.5, 1.0, 0.0]), SlopeBand::default()).unwrap_err();
        assert!(matches!(err, Error::EmptySegments));
    }

    #[test]
    fn band_validation() {
        assert!(SlopeBand::new(0.8, 0.2).is_err());
        assert!(SlopeBand::new(-0.1, 0.5).is_err());
        assert!(SlopeBand::new(0.0, 1.0).is_ok());
        let bad = IntensityTrace {
            i_max: 0.0,
            ..trace(vec![0.5; 4])
        };
        assert!(extract_phase(&bad, SlopeBand::default()).is_err());
    }

    #[test]
    fn recovers_a_slow_ramp_on_the_principal_branch() {
        let setup = MzSetup {
            i_max: 3.0,
            i_min: 1.0,
            phi0: 0.0,
        };
        let truth = PhaseTrace::new(
            0.0,
            1e-6,
            (0..200).map(|k| 0.2 + 0.0137 * k as f64).collect(),
        );
        let rec = extract_phase(&setup.render(&truth).unwrap(), SlopeBand::default()).unwrap();
        assert_eq!(rec.segments.len(), 1);
        for r in rec.segments[0].clone() {
            assert!((rec.samples[r] - truth.samples[r]).abs() < 1e-9);
        }
    }

    #[test]
    fn full_band_continues_through_extremes() {
        // Exactly hit the branch points so the continuation is unambiguous.
        let truth: Vec<f64> = (0..=40).map(|k| -PI / 2.0 + k as f64 * PI / 8.0).collect();
        let setup = MzSetup {
            i_max: 1.0,
            i_min: 0.0,
            phi0: 0.0,
        };
        let samples = truth
            .iter()
            .map(|&p| {
                let u = (1.0 + p.cos()) / 2.0;
                if (u - 1.0).abs() < 1e-12 {
                    1.0
                } else if u.abs() < 1e-12 {
                    0.0
                } else {
                    u
                }
            })
            .collect();
        let it = IntensityTrace {
            samples,
            ..setup
                .render(&PhaseTrace::new(0.0, 1e-6, truth.clone()))
                .unwrap()
        };
        let rec = extract_phase(&it, SlopeBand::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(rec.segments, vec![0..41]);
        // Recovered phase is the mirror image of the truth: a monotone ramp.
        for k in 1..truth.len() {
            let step = rec.samples[k] - rec.samples[k - 1];
            assert!((step.abs() - PI / 8.0).abs() < 1e-6, "k={k} step={step}");
            assert!(step.signum() == (rec.samples[1] - rec.samples[0]).signum());
        }
    }
}
