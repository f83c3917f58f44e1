use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::noise_process::PhaseTrace;

/// Lags (in samples) below which every lag is kept.
pub const DENSE_LAGS: usize = 100;

/// Signed phase increments `phi(t_j + tau) - phi(t_j)` for a set of lags,
/// taken over overlapping pairs that lie inside a single segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSets {
    pub dt: f64,
    /// Lags in samples, strictly increasing.
    pub lags: Vec<usize>,
    pub sets: Vec<Vec<f64>>,
}

impl IncrementSets {
    pub fn tau(&self, index: usize) -> f64 {
        self.lags[index] as f64 * self.dt
    }

    pub fn taus(&self) -> Vec<f64> {
        self.lags.iter().map(|&l| l as f64 * self.dt).collect()
    }

    /// Increments at lag `tau`, which must be on the sample grid.
    pub fn at(&self, tau: f64) -> Result<&[f64]> {
        let lag = lag_for(tau, self.dt)?;
        self.lags
            .binary_search(&lag)
            .map(|i| self.sets[i].as_slice())
            .map_err(|_| Error::domain("tau", format!("lag {tau} s was not collected")))
    }
}

/// Converts a lag in seconds to a whole number of samples.
pub fn lag_for(tau: f64, dt: f64) -> Result<usize> {
    ensure_finite("tau", tau)?;
    let ratio = tau / dt;
    let lag = ratio.round();
    if lag < 1.0 || (ratio - lag).abs() > 1e-6 * lag.max(1.0) {
        return Err(Error::domain(
            "tau",
            format!("{tau} s is not a positive multiple of the sample interval {dt} s"),
        ));
    }
    Ok(lag as usize)
}

/// Increment sets at the lags `taus` (seconds).
pub fn increment_sets(phase: &PhaseTrace, taus: &[f64]) -> Result<IncrementSets> {
    phase.validate()?;
    let lags = taus
        .iter()
        .map(|&t| lag_for(t, phase.dt))
        .collect::<Result<Vec<_>>>()?;
    increment_sets_by_lag(phase, &lags)
}

/// Increment sets at lags given in samples. Lags are sorted and deduplicated.
pub fn increment_sets_by_lag(phase: &PhaseTrace, lags: &[usize]) -> Result<IncrementSets> {
    phase.validate()?;
    let mut lags = lags.to_vec();
    lags.sort_unstable();
    lags.dedup();
    if lags.first() == Some(&0) {
        return Err(Error::domain("tau", "lag must be at least one sample"));
    }
    let sets = lags
        .par_iter()
        .map(|&lag| {
            phase
                .segment_slices()
                .flat_map(|s| s.iter().zip(s.iter().skip(lag)).map(|(a, b)| b - a))
                .collect()
        })
        .collect();
    Ok(IncrementSets {
        dt: phase.dt,
        lags,
        sets,
    })
}

/// Default lag grid: every lag up to [`DENSE_LAGS`], then geometric steps
/// of about 50 per decade up to `max_lag`.
pub fn default_lag_grid(max_lag: usize) -> Vec<usize> {
    let mut lags: Vec<usize> = (1..=max_lag.min(DENSE_LAGS)).collect();
    let ratio = 10f64.powf(1.0 / 50.0);
    let mut next = DENSE_LAGS as f64;
    loop {
        next *= ratio;
        let lag = next.round() as usize;
        if lag > max_lag {
            break;
        }
        if lags.last().is_some_and(|&l| l < lag) {
            lags.push(lag);
        }
    }
    lags
}

/// [`default_lag_grid`] for lags up to `tau_max` seconds.
pub fn lag_grid_up_to(tau_max: f64, dt: f64) -> Result<Vec<usize>> {
    ensure_finite("tau_max", tau_max)?;
    if tau_max < dt {
        return Err(Error::domain(
            "tau_max",
            format!("must be at least one sample interval ({dt} s), got {tau_max}"),
        ));
    }
    Ok(default_lag_grid(
        (tau_max / dt * (1.0 + 1e-12)).floor() as usize
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_phase_gives_zero_increments() {
        let p = PhaseTrace::new(0.0, 1e-6, vec![1.3; 50]);
        let sets = increment_sets(&p, &[1e-6, 5e-6, 20e-6]).unwrap();
        assert_eq!(sets.lags, vec![1, 5, 20]);
        for s in &sets.sets {
            assert!(s.iter().all(|&d| d == 0.0));
        }
        assert_eq!(sets.sets[2].len(), 30);
    }

    #[test]
    fn linear_phase_gives_constant_increments() {
        let rate = 250.0;
        let dt = 2e-6;
        let p = PhaseTrace::new(0.0, dt, (0..100).map(|k| rate * k as f64 * dt).collect());
        let sets = increment_sets(&p, &[10.0 * dt]).unwrap();
        assert!(sets.sets[0]
            .iter()
            .all(|&d| (d - rate * 10.0 * dt).abs() < 1e-12));
    }

    #[test]
    fn pairs_never_cross_segments() {
        let p = PhaseTrace::with_segments(
            0.0,
            1.0,
            (0..10).map(f64::from).collect(),
            vec![0..4, 6..10],
        )
        .unwrap();
        let sets = increment_sets_by_lag(&p, &[3, 1, 3, 5]).unwrap();
        assert_eq!(sets.lags, vec![1, 3, 5]);
        assert_eq!(sets.sets[0].len(), 6);
        assert_eq!(sets.sets[1], vec![3.0, 3.0]);
        assert!(sets.sets[2].is_empty());
    }

    #[test]
    fn off_grid_lags_are_rejected() {
        let p = PhaseTrace::new(0.0, 2e-6, vec![0.0; 10]);
        assert!(increment_sets(&p, &[3e-6]).is_err());
        assert!(increment_sets(&p, &[0.0]).is_err());
        assert!(increment_sets(&p, &[-2e-6]).is_err());
        assert!(increment_sets(&p, &[182e-6]).is_ok());
        assert!(increment_sets_by_lag(&p, &[0]).is_err());
    }

    #[test]
    fn lag_grid_shape() {
        assert_eq!(default_lag_grid(5), vec![1, 2, 3, 4, 5]);
        let g = default_lag_grid(10_000);
        assert_eq!(&g[..100], &(1..=100).collect::<Vec<_>>()[..]);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(*g.last().unwrap() <= 10_000);
        assert!(g.len() < 220);
        assert!(lag_grid_up_to(-5e-6, 1e-6).is_err());
        assert_eq!(lag_grid_up_to(10e-6, 2e-6).unwrap(), vec![1, 2, 3, 4, 5]);
    }
}
