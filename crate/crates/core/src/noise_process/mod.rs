//! Calibrated stochastic models of interferometric fiber phase noise.
//!
//! A [`PhaseProcess`] is a gaussian, self-similar process with stationary
//! increments: the standard deviation of `phi(t + tau) - phi(t)` is
//! `sigma_ref * (tau / tau_ref)^hurst` for every lag, optionally superposed on
//! a deterministic linear drift.

mod synthesis;

use std::ops::Range;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::rng::stream_rng;

pub use synthesis::{fgn_autocovariance, CHOLESKY_MAX_INCREMENTS, MAX_SYNTHESIS_INCREMENTS};

/// Vacuum speed of light in km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Group index of standard single-mode fiber near 1550 nm (about 5 us/km).
pub const DEFAULT_GROUP_INDEX: f64 = 1.5;

/// One-way propagation time in seconds through `length_km` of fiber.
pub fn travel_time(length_km: f64, group_index: f64) -> f64 {
    length_km * group_index / SPEED_OF_LIGHT_KM_S
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Increment standard deviation at `tau_ref` (rad).
    pub sigma_ref: f64,
    /// Reference lag (s).
    pub tau_ref: f64,
    /// Scaling exponent of the increment standard deviation, in (0, 1).
    pub hurst: f64,
    /// Linear phase drift (rad/s).
    pub drift_rate: f64,
    /// Fiber length (km).
    pub length_km: f64,
    pub group_index: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_ref: 0.0,
            tau_ref: 100e-6,
            hurst: 0.5,
            drift_rate: 0.0,
            length_km: 36.5,
            group_index: DEFAULT_GROUP_INDEX,
        }
    }
}

impl NoiseParams {
    /// Random-walk-like parameters with no drift and default geometry.
    pub fn new(sigma_ref: f64, tau_ref: f64, hurst: f64) -> Self {
        Self {
            sigma_ref,
            tau_ref,
            hurst,
            ..Self::default()
        }
    }

    pub fn with_drift(mut self, drift_rate: f64) -> Self {
        self.drift_rate = drift_rate;
        self
    }

    pub fn with_geometry(mut self, length_km: f64, group_index: f64) -> Self {
        self.length_km = length_km;
        self.group_index = group_index;
        self
    }

    /// Parameters for which a Sagnac loop of `loop_km` has effective phase
    /// variance `diffusion * loop_km`, the reference lag being half the loop
    /// travel time.
    pub fn from_sagnac_calibration(
        diffusion: f64,
        loop_km: f64,
        hurst: f64,
        group_index: f64,
    ) -> Result<Self> {
        ensure_finite("diffusion", diffusion)?;
        ensure_finite("loop_km", loop_km)?;
        if diffusion < 0.0 {
            return Err(Error::domain(
                "diffusion",
                format!("must be >= 0, got {diffusion}"),
            ));
        }
        if loop_km <= 0.0 {
            return Err(Error::domain(
                "loop_km",
                format!("must be > 0, got {loop_km}"),
            ));
        }
        let params = Self {
            sigma_ref: (diffusion * loop_km).sqrt(),
            tau_ref: travel_time(loop_km, group_index) / 2.0,
            hurst,
            drift_rate: 0.0,
            length_km: loop_km,
            group_index,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("sigma_ref", self.sigma_ref)?;
        ensure_finite("tau_ref", self.tau_ref)?;
        ensure_finite("hurst", self.hurst)?;
        ensure_finite("drift_rate", self.drift_rate)?;
        ensure_finite("length_km", self.length_km)?;
        ensure_finite("group_index", self.group_index)?;
        if self.sigma_ref < 0.0 {
            return Err(Error::domain(
                "sigma_ref",
                format!("must be >= 0, got {}", self.sigma_ref),
            ));
        }
        if self.tau_ref <= 0.0 {
            return Err(Error::domain(
                "tau_ref",
                format!("must be > 0, got {}", self.tau_ref),
            ));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::domain(
                "hurst",
                format!("must lie in (0, 1), got {}", self.hurst),
            ));
        }
        if self.length_km <= 0.0 {
            return Err(Error::domain(
                "length_km",
                format!("must be > 0, got {}", self.length_km),
            ));
        }
        if self.group_index <= 1.0 {
            return Err(Error::domain(
                "group_index",
                format!("must be > 1, got {}", self.group_index),
            ));
        }
        Ok(())
    }
}

/// Validated, immutable phase-noise process.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProcess {
    params: NoiseParams,
}

impl PhaseProcess {
    pub fn new(params: NoiseParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    /// Standard deviation of the phase increment over lag `tau` (s).
    pub fn sigma_at(&self, tau: f64) -> Result<f64> {
        ensure_finite("tau", tau)?;
        if tau < 0.0 {
            return Err(Error::domain("tau", format!("must be >= 0, got {tau}")));
        }
        if tau == 0.0 {
            return Ok(0.0);
        }
        let p = &self.params;
        Ok(p.sigma_ref * (tau / p.tau_ref).powf(p.hurst))
    }

    /// One realization on the grid `0, dt, ..., n*dt` with `n = floor(duration / dt)`.
    ///
    /// The trace starts at phase zero. Output is a pure function of
    /// `(params, duration, dt, seed)`.
    pub fn sample_trace(&self, duration: f64, dt: f64, seed: u64) -> Result<PhaseTrace> {
        self.sample_stream(duration, dt, seed, 0)
    }

    /// `count` independent realizations, realization `i` drawn from
    /// sub-stream `i` of `seed`. Runs in parallel; the result does not depend
    /// on scheduling.
    pub fn sample_traces(
        &self,
        duration: f64,
        dt: f64,
        seed: u64,
        count: usize,
    ) -> Result<Vec<PhaseTrace>> {
        use rayon::prelude::*;
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample_stream(duration, dt, seed, i))
            .collect()
    }

    fn sample_stream(&self, duration: f64, dt: f64, seed: u64, stream: u64) -> Result<PhaseTrace> {
        let steps = grid_steps(duration, dt)?;
        let p = &self.params;
        let mut samples = vec![0.0; steps + 1];

        if p.sigma_ref > 0.0 && steps > 0 {
            let step_sigma = self.sigma_at(dt)?;
            let mut rng = stream_rng(seed, stream);
            let increments = if p.hurst == 0.5 {
                (0..steps)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect::<Vec<f64>>()
            } else {
                synthesis::fractional_gaussian_noise(steps, p.hurst, &mut rng)?
            };
            let mut phase = 0.0;
            for (slot, dw) in samples[1..].iter_mut().zip(&increments) {
                phase += step_sigma * dw;
                *slot = phase;
            }
        }

        if p.drift_rate != 0.0 {
            for (k, slot) in samples.iter_mut().enumerate() {
                *slot += p.drift_rate * (k as f64 * dt);
            }
        }

        Ok(PhaseTrace::new(0.0, dt, samples))
    }
}

/// Number of whole steps of `dt` that fit in `duration`.
pub(crate) fn grid_steps(duration: f64, dt: f64) -> Result<usize> {
    ensure_finite("dt", dt)?;
    ensure_finite("duration", duration)?;
    if dt <= 0.0 {
        return Err(Error::domain("dt", format!("must be > 0, got {dt}")));
    }
    if duration < dt {
        return Err(Error::domain(
            "duration",
            format!("must be >= dt ({dt}), got {duration}"),
        ));
    }
    // Absorb the rounding in e.g. 100e-6 / 1e-6.
    let steps = (duration / dt * (1.0 + 1e-12)).floor();
    if steps > (usize::MAX / 2) as f64 {
        return Err(Error::Resource(format!("{steps} samples requested")));
    }
    Ok(steps as usize)
}

/// A sampled phase record. Only samples inside `segments` carry a valid
/// phase; increments are never taken across a segment boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub segments: Vec<Range<usize>>,
}

impl PhaseTrace {
    /// A trace whose samples are all valid (a single segment).
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Self {
        let segments = if samples.is_empty() {
            Vec::new()
        } else {
            std::iter::once(0..samples.len()).collect()
        };
        Self {
            t0,
            dt,
            samples,
            segments,
        }
    }

    pub fn with_segments(
        t0: f64,
        dt: f64,
        samples: Vec<f64>,
        segments: Vec<Range<usize>>,
    ) -> Result<Self> {
        let trace = Self {
            t0,
            dt,
            samples,
            segments,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("t0", self.t0)?;
        ensure_finite("dt", self.dt)?;
        if self.dt <= 0.0 {
            return Err(Error::domain("dt", format!("must be > 0, got {}", self.dt)));
        }
        let mut prev_end = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.start >= seg.end {
                return Err(Error::domain("segments", format!("segment {i} is empty")));
            }
            if i > 0 && seg.start < prev_end {
                return Err(Error::domain(
                    "segments",
                    format!("segment {i} overlaps or precedes its predecessor"),
                ));
            }
            if seg.end > self.samples.len() {
                return Err(Error::domain(
                    "segments",
                    format!("segment {i} ends past the last sample"),
                ));
            }
            prev_end = seg.end;
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

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|k| self.time(k))
    }

    /// Samples of each valid segment.
    pub fn segment_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.segments.iter().map(|r| &self.samples[r.clone()])
    }

    /// Number of samples covered by segments.
    pub fn valid_len(&self) -> usize {
        self.segments.iter().map(|r| r.len()).sum()
    }
}
