use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use super::increments::{lag_for, IncrementSets};
use crate::error::{ensure_finite, Error, Result};
use crate::interferometer::sigma_from_visibility;

/// Minimum increments required by [`fit_gaussian`].
pub const MIN_GAUSSIAN_INCREMENTS: usize = 100;

/// Mean absolute change `<|x|>` of a zero-mean gaussian of width `sigma`.
pub fn gaussian_mean_abs(sigma: f64) -> f64 {
    FRAC_2_PI.sqrt() * sigma
}

/// Per-lag summary of a phase record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub taus: Vec<f64>,
    /// Mean of `|delta phi|` per lag (rad).
    pub mean_abs_change: Vec<f64>,
    /// Sample standard deviation of the signed increments per lag (rad).
    pub sigma_per_tau: Vec<f64>,
    pub n_increments: Vec<usize>,
    pub histogram: Option<GaussianFit>,
    pub scaling_exponent: Option<ExponentFit>,
}

impl PhaseStats {
    fn index_of(&self, tau: f64) -> Result<usize> {
        let tol = 1e-9 * tau.abs().max(f64::MIN_POSITIVE);
        self.taus
            .iter()
            .position(|&t| (t - tau).abs() <= tol)
            .ok_or_else(|| Error::domain("tau", format!("no statistics at lag {tau} s")))
    }

    pub fn mean_abs_change_at(&self, tau: f64) -> Result<f64> {
        self.index_of(tau).map(|i| self.mean_abs_change[i])
    }

    pub fn sigma_at(&self, tau: f64) -> Result<f64> {
        self.index_of(tau).map(|i| self.sigma_per_tau[i])
    }
}

/// Mean absolute phase change per lag. Lags with fewer than two increments
/// are omitted.
pub fn mean_phase_change(sets: &IncrementSets) -> Result<PhaseStats> {
    let mut stats = PhaseStats {
        taus: Vec::new(),
        mean_abs_change: Vec::new(),
        sigma_per_tau: Vec::new(),
        n_increments: Vec::new(),
        histogram: None,
        scaling_exponent: None,
    };
    for (i, set) in sets.sets.iter().enumerate() {
        if set.len() < 2 {
            continue;
        }
        stats.taus.push(sets.tau(i));
        stats.mean_abs_change.push(mean_abs(set));
        stats.sigma_per_tau.push(sample_std(set));
        stats.n_increments.push(set.len());
    }
    if stats.taus.is_empty() {
        return Err(Error::Statistics(
            "no lag has at least two increments".into(),
        ));
    }
    Ok(stats)
}

fn mean_abs(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins over the data range. A zero-width range yields one
    /// unit-width bin centred on the common value.
    pub fn build(xs: &[f64], bins: usize) -> Self {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || bins == 0 {
            let c = if lo.is_finite() { lo } else { 0.0 };
            return Self {
                edges: vec![c - 0.5, c + 0.5],
                counts: vec![xs.len() as u64],
            };
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in xs {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}

/// Gaussian curve `amplitude * exp(-(x - mean)^2 / (2 width^2))` fitted to
/// histogram counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramGaussian {
    pub amplitude: f64,
    pub mean: f64,
    pub width: f64,
}

impl HistogramGaussian {
    pub fn evaluate(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub tau: f64,
    pub n: usize,
    /// Sample standard deviation; the estimate to use.
    pub sigma: f64,
    pub mean: f64,
    pub histogram: Histogram,
    /// Least-squares gaussian through the histogram, for plotting.
    pub curve: Option<HistogramGaussian>,
    /// Set when every increment is identical.
    pub degenerate: bool,
}

/// Width of the signed increment distribution at lag `tau`, with a
/// histogram of `ceil(sqrt(n))` bins unless `bins` is given.
pub fn fit_gaussian(sets: &IncrementSets, tau: f64, bins: Option<usize>) -> Result<GaussianFit> {
    let xs = sets.at(tau)?;
    if xs.len() < MIN_GAUSSIAN_INCREMENTS {
        return Err(Error::Statistics(format!(
            "{} increments at lag {tau} s, need at least {MIN_GAUSSIAN_INCREMENTS}",
            xs.len()
        )));
    }
    let bins = bins
        .unwrap_or_else(|| (xs.len() as f64).sqrt().ceil() as usize)
        .max(1);
    let sigma = sample_std(xs);
    let degenerate = sigma == 0.0;
    let histogram = Histogram::build(xs, bins);
    let curve = if degenerate {
        None
    } else {
        fit_histogram(&histogram)
    };
    Ok(GaussianFit {
        tau: lag_for(tau, sets.dt)? as f64 * sets.dt,
        n: xs.len(),
        sigma,
        mean: mean(xs),
        histogram,
        curve,
        degenerate,
    })
}

/// Weighted least squares of `ln(count)` against a parabola, weights equal
/// to the counts (Guo's correction of Caruana's method).
fn fit_histogram(h: &Histogram) -> Option<HistogramGaussian> {
    let centers = h.centers();
    // Centre and scale the abscissa for conditioning.
    let shift = mean(&centers);
    let scale = h.bin_width() * centers.len() as f64;
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    let mut used = 0;
    for (&x, &c) in centers.iter().zip(&h.counts) {
        if c == 0 {
            continue;
        }
        used += 1;
        let y = c as f64;
        let w = y * y;
        let z = (x - shift) / scale;
        let basis = [1.0, z, z * z];
        for i in 0..3 {
            rhs[i] += w * basis[i] * y.ln();
            for j in 0..3 {
                normal[i][j] += w * basis[i] * basis[j];
            }
        }
    }
    if used < 3 {
        return None;
    }
    let [a, b, c] = solve_symmetric3(normal, rhs)?;
    if c >= 0.0 {
        return None;
    }
    let mean_z = -b / (2.0 * c);
    let width_z = (-1.0 / (2.0 * c)).sqrt();
    Some(HistogramGaussian {
        amplitude: (a - b * b / (4.0 * c)).exp(),
        mean: shift + mean_z * scale,
        width: width_z * scale,
    })
}

fn solve_symmetric3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    // Cramer's rule.
    let mut x = [0.0; 3];
    for (col, slot) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *slot = det(&m) / d;
    }
    Some(x)
}

/// Relative departure of the mean absolute change from the gaussian value
/// `sqrt(2/pi) * sigma` at lag `tau`.
pub fn check_gaussian_relation(stats: &PhaseStats, tau: f64) -> Result<f64> {
    let i = stats.index_of(tau)?;
    gaussian_relation_deviation(stats.mean_abs_change[i], stats.sigma_per_tau[i])
}

pub fn gaussian_relation_deviation(mean_abs_change: f64, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::Undefined(
            "gaussian relation is undefined for a zero-width distribution".into(),
        ));
    }
    let expected = gaussian_mean_abs(sigma);
    Ok((mean_abs_change - expected).abs() / expected)
}

/// First lag at which the mean absolute change reaches `target`, linearly
/// interpolated between the bracketing lags. The curve is taken to start
/// at zero change at zero lag.
pub fn tau_threshold(stats: &PhaseStats, target: f64) -> Result<f64> {
    ensure_finite("target", target)?;
    if target <= 0.0 {
        return Err(Error::domain(
            "target",
            format!("must be > 0, got {target}"),
        ));
    }
    let (mut prev_tau, mut prev_val) = (0.0, 0.0);
    for (&tau, &val) in stats.taus.iter().zip(&stats.mean_abs_change) {
        if val >= target {
            return Ok(prev_tau + (target - prev_val) / (val - prev_val) * (tau - prev_tau));
        }
        prev_tau = tau;
        prev_val = val;
    }
    Err(Error::NotReached {
        target,
        max_observed: stats.mean_abs_change.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// Fitted mean absolute change at unit lag (1 s), `exp(intercept)`.
    pub prefactor: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_lags: usize,
}

/// Slope of `ln(mean_abs_change)` against `ln(tau)` over lags in
/// `[tau_min, tau_max]`.
pub fn fit_scaling_exponent(stats: &PhaseStats, tau_min: f64, tau_max: f64) -> Result<ExponentFit> {
    ensure_finite("tau_min", tau_min)?;
    ensure_finite("tau_max", tau_max)?;
    if !(tau_min > 0.0 && tau_min < tau_max) {
        return Err(Error::domain(
            "tau_range",
            format!("need 0 < tau_min < tau_max, got [{tau_min}, {tau_max}]"),
        ));
    }
    let slack = 1e-9;
    let points: Vec<(f64, f64)> = stats
        .taus
        .iter()
        .zip(&stats.mean_abs_change)
        .filter(|(&t, _)| t >= tau_min * (1.0 - slack) && t <= tau_max * (1.0 + slack))
        .map(|(&t, &d)| (t, d))
        .collect();
    if points.len() < 3 {
        return Err(Error::Statistics(format!(
            "{} lags in [{tau_min}, {tau_max}] s, need at least 3",
            points.len()
        )));
    }
    if let Some(&(t, d)) = points.iter().find(|(_, d)| *d <= 0.0) {
        return Err(Error::domain(
            "mean_abs_change",
            format!("non-positive value {d} at lag {t} s cannot be log-fitted"),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, d)| (t.ln(), d.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(ExponentFit {
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        tau_min: points[0].0,
        tau_max: points[points.len() - 1].0,
        n_lags: points.len(),
    })
}

/// Phase width or Sagnac visibility, the two inputs the diffusion estimate
/// accepts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseWidth {
    Sigma(f64),
    Visibility(f64),
}

impl PhaseWidth {
    pub fn sigma(self) -> Result<f64> {
        match self {
            PhaseWidth::Sigma(s) => {
                ensure_finite("sigma", s)?;
                if s < 0.0 {
                    return Err(Error::domain("sigma", format!("must be >= 0, got {s}")));
                }
                Ok(s)
            }
            PhaseWidth::Visibility(v) => sigma_from_visibility(v),
        }
    }
}

/// Diffusion coefficient `sigma^2 / L` (rad^2/km) of a fiber of `length_km`.
pub fn estimate_diffusion(width: PhaseWidth, length_km: f64) -> Result<f64> {
    ensure_finite("length_km", length_km)?;
    if length_km <= 0.0 {
        return Err(Error::domain(
            "length_km",
            format!("must be > 0, got {length_km}"),
        ));
    }
    let sigma = width.sigma()?;
    Ok(sigma * sigma / length_km)
}
