//! Phase-noise budgets for quantum-repeater chains.
//!
//! An elementary link heralds the state `(|01> + e^{i(Phi + d)}|10>)/sqrt(2)`
//! with a gaussian phase error `d`. Averaging over `d` gives fidelity
//! `(1 + exp(-sigma^2/2)) / 2` with the ideal state, and after entanglement
//! swapping the per-link errors add, so variances add along the chain.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::gaussian_mean_abs;
use crate::error::{ensure_finite, Error, Result};
use crate::interferometer::{sigma_from_visibility, visibility_from_sigma};
use crate::rng::stream_rng;

/// Samples drawn per Monte Carlo sub-stream.
const MC_CHUNK: usize = 1 << 16;

pub fn fidelity_from_sigma(sigma: f64) -> Result<f64> {
    Ok((1.0 + visibility_from_sigma(sigma)?) / 2.0)
}

/// Monte Carlo estimate of the fidelity: the mean of `(1 + cos d) / 2` over
/// `d ~ N(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub n_samples: usize,
}

pub fn monte_carlo_fidelity(sigma: f64, n_samples: usize, seed: u64) -> Result<FidelityEstimate> {
    ensure_finite("sigma", sigma)?;
    if sigma < 0.0 {
        return Err(Error::domain("sigma", format!("must be >= 0, got {sigma}")));
    }
    if n_samples == 0 {
        return Err(Error::domain("n_samples", "must be >= 1"));
    }
    if sigma == 0.0 {
        return Ok(FidelityEstimate {
            fidelity: 1.0,
            std_error: 0.0,
            n_samples,
        });
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain("sigma", e.to_string()))?;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    // Per-chunk (sum, sum of squares), merged in chunk order.
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            (0..len).fold((0.0, 0.0), |(s, ss), _| {
                let f = 0.5 * (1.0 + normal.sample(&mut rng).cos());
                (s + f, ss + f * f)
            })
        })
        .collect();
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, ss), &(a, b)| (s + a, ss + b));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(FidelityEstimate {
        fidelity: mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RepeaterChain {
    pub link_lengths: Vec<f64>,
    /// Per-link phase widths; take precedence over `diffusion`.
    pub link_sigmas: Option<Vec<f64>>,
    /// Shared diffusion coefficient (rad^2/km).
    pub diffusion: Option<f64>,
}

impl RepeaterChain {
    pub fn from_sigmas(link_lengths: Vec<f64>, link_sigmas: Vec<f64>) -> Self {
        Self {
            link_lengths,
            link_sigmas: Some(link_sigmas),
            diffusion: None,
        }
    }

    pub fn from_diffusion(link_lengths: Vec<f64>, diffusion: f64) -> Self {
        Self {
            link_lengths,
            link_sigmas: None,
            diffusion: Some(diffusion),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.link_lengths.is_empty() {
            return Err(Error::domain(
                "link_lengths",
                "a chain needs at least one link",
            ));
        }
        for &l in &self.link_lengths {
            ensure_finite("link_lengths", l)?;
            if l <= 0.0 {
                return Err(Error::domain(
                    "link_lengths",
                    format!("must be > 0, got {l}"),
                ));
            }
        }
        match (&self.link_sigmas, self.diffusion) {
            (Some(sigmas), _) => {
                if sigmas.len() != self.link_lengths.len() {
                    return Err(Error::domain(
                        "link_sigmas",
                        format!(
                            "{} sigmas for {} links",
                            sigmas.len(),
                            self.link_lengths.len()
                        ),
                    ));
                }
                for &s in sigmas {
                    ensure_finite("link_sigmas", s)?;
                    if s < 0.0 {
                        return Err(Error::domain(
                            "link_sigmas",
                            format!("must be >= 0, got {s}"),
                        ));
                    }
                }
            }
            (None, Some(d)) => {
                ensure_finite("diffusion", d)?;
                if d < 0.0 {
                    return Err(Error::domain("diffusion", format!("must be >= 0, got {d}")));
                }
            }
            (None, None) => {
                return Err(Error::domain(
                    "chain",
                    "either per-link sigmas or a diffusion coefficient is required",
                ))
            }
        }
        Ok(())
    }

    /// Phase variance of every link.
    pub fn link_variances(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match (&self.link_sigmas, self.diffusion) {
            (Some(sigmas), _) => sigmas.iter().map(|s| s * s).collect(),
            (None, Some(d)) => self.link_lengths.iter().map(|l| d * l).collect(),
            (None, None) => unreachable!("validated"),
        })
    }

    /// Links of `self` followed by those of `other`, resolved to per-link sigmas.
    pub fn concat(&self, other: &RepeaterChain) -> Result<RepeaterChain> {
        let sigmas = self
            .link_variances()?
            .into_iter()
            .chain(other.link_variances()?)
            .map(f64::sqrt)
            .collect();
        let lengths = self
            .link_lengths
            .iter()
            .chain(&other.link_lengths)
            .copied()
            .collect();
        Ok(RepeaterChain::from_sigmas(lengths, sigmas))
    }
}

/// End-to-end phase width of a chain: per-link variances add.
pub fn chain_sigma(chain: &RepeaterChain) -> Result<f64> {
    Ok(chain.link_variances()?.iter().sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub total_km: f64,
    pub n_links: usize,
    pub segment_km: f64,
    pub total_sigma: f64,
    pub fidelity: f64,
    pub visibility: f64,
    pub per_link_sigma: f64,
    pub per_segment_sigma_limit: f64,
    /// Allowed mean absolute phase change over the segment.
    pub per_segment_dphi_limit: f64,
}

/// Phase allowance for a fiber segment of a chain of `n_links` equal links
/// spanning `total_km`, such that the end-to-end fidelity is
/// `target_fidelity`. Variance is split evenly between links and, within a
/// link, in proportion to fiber length.
pub fn budget_per_segment(
    total_km: f64,
    n_links: usize,
    target_fidelity: f64,
    segment_km: f64,
) -> Result<BudgetReport> {
    ensure_finite("total_km", total_km)?;
    ensure_finite("fidelity", target_fidelity)?;
    ensure_finite("segment_km", segment_km)?;
    if total_km <= 0.0 {
        return Err(Error::domain(
            "total_km",
            format!("must be > 0, got {total_km}"),
        ));
    }
    if n_links < 1 {
        return Err(Error::domain("n_links", "must be >= 1"));
    }
    if !(target_fidelity > 0.5 && target_fidelity < 1.0) {
        return Err(Error::domain(
            "fidelity",
            format!("target must lie in (0.5, 1), got {target_fidelity}"),
        ));
    }
    let link_km = total_km / n_links as f64;
    if !(segment_km > 0.0 && segment_km <= link_km * (1.0 + 1e-12)) {
        return Err(Error::domain(
            "segment_km",
            format!("must lie in (0, {link_km}] (one link), got {segment_km}"),
        ));
    }
    let visibility =
        fidelity_visibility_convert(target_fidelity, Conversion::FidelityToVisibility)?;
    let total_var = -2.0 * visibility.ln();
    let link_var = total_var / n_links as f64;
    let segment_var = link_var * (segment_km * n_links as f64 / total_km);
    let sigma_limit = segment_var.sqrt();
    Ok(BudgetReport {
        total_km,
        n_links,
        segment_km,
        total_sigma: total_var.sqrt(),
        fidelity: target_fidelity,
        visibility,
        per_link_sigma: link_var.sqrt(),
        per_segment_sigma_limit: sigma_limit,
        per_segment_dphi_limit: gaussian_mean_abs(sigma_limit),
    })
}

/// Sagnac visibility expected for `length_km` of fiber with diffusion
/// coefficient `diffusion` (rad^2/km).
pub fn predict_visibility(diffusion: f64, length_km: f64) -> Result<f64> {
    ensure_finite("diffusion", diffusion)?;
    ensure_finite("length_km", length_km)?;
    if diffusion < 0.0 {
        return Err(Error::domain(
            "diffusion",
            format!("must be >= 0, got {diffusion}"),
        ));
    }
    if length_km <= 0.0 {
        return Err(Error::domain(
            "length_km",
            format!("must be > 0, got {length_km}"),
        ));
    }
    Ok((-diffusion * length_km / 2.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conversion {
    VisibilityToFidelity,
    FidelityToVisibility,
}

/// `F = (1 + V) / 2` and its inverse.
pub fn fidelity_visibility_convert(value: f64, direction: Conversion) -> Result<f64> {
    ensure_finite("value", value)?;
    match direction {
        Conversion::VisibilityToFidelity => {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::domain(
                    "visibility",
                    format!("must lie in [0, 1], got {value}"),
                ));
            }
            Ok((1.0 + value) / 2.0)
        }
        Conversion::FidelityToVisibility => {
            if !(0.5..=1.0).contains(&value) {
                return Err(Error::domain(
                    "fidelity",
                    format!("must lie in [0.5, 1], got {value}"),
                ));
            }
            Ok(2.0 * value - 1.0)
        }
    }
}

/// Phase width that yields fidelity `fidelity`.
pub fn sigma_for_fidelity(fidelity: f64) -> Result<f64> {
    let v = fidelity_visibility_convert(fidelity, Conversion::FidelityToVisibility)?;
    sigma_from_visibility(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_values() {
        assert_eq!(fidelity_from_sigma(0.0).unwrap(), 1.0);
        assert!((fidelity_from_sigma(50.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((fidelity_from_sigma(0.6681).unwrap() - 0.9).abs() < 5e-5);
        assert!((sigma_for_fidelity(0.9).unwrap() - 0.668047).abs() < 1e-6);
        assert!(fidelity_from_sigma(-0.1).is_err());
    }

    #[test]
    fn monte_carlo_limits() {
        let e = monte_carlo_fidelity(0.0, 17, 1).unwrap();
        assert_eq!(e.fidelity, 1.0);
        let e = monte_carlo_fidelity(0.5, 1, 1).unwrap();
        assert_eq!(e.n_samples, 1);
        assert!(monte_carlo_fidelity(0.5, 0, 1).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_fidelity(0.36, 200_000, 9).unwrap();
        let b = monte_carlo_fidelity(0.36, 200_000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_examples() {
        let single = RepeaterChain::from_sigmas(vec![50.0], vec![0.3]);
        assert!((chain_sigma(&single).unwrap() - 0.3).abs() < 1e-15);

        let eight = RepeaterChain::from_sigmas(vec![125.0; 8], vec![0.1276; 8]);
        assert!((chain_sigma(&eight).unwrap() - 0.361).abs() < 5e-4);

        let d = RepeaterChain::from_diffusion(vec![35.0, 36.5], 8e-4);
        assert!((chain_sigma(&d).unwrap() - 0.0572f64.sqrt()).abs() < 1e-15);
        assert!((chain_sigma(&d).unwrap() - 0.239).abs() < 5e-4);
    }

    #[test]
    fn chain_validation() {
        let neither = RepeaterChain {
            link_lengths: vec![10.0],
            ..Default::default()
        };
        assert!(chain_sigma(&neither).is_err());
        let both = RepeaterChain {
            link_lengths: vec![10.0],
            link_sigmas: Some(vec![0.5]),
            diffusion: Some(1.0),
        };
        assert_eq!(chain_sigma(&both).unwrap(), 0.5);
        assert!(chain_sigma(&RepeaterChain::from_sigmas(vec![10.0, 5.0], vec![0.1])).is_err());
        assert!(chain_sigma(&RepeaterChain::from_diffusion(vec![0.0], 1e-3)).is_err());
        assert!(chain_sigma(&RepeaterChain::from_diffusion(vec![], 1e-3)).is_err());
    }

    #[test]
    fn budget_examples() {
        let r = budget_per_segment(1000.0, 8, 0.9, 36.5).unwrap();
        assert!((r.per_segment_dphi_limit - 0.1018).abs() < 5e-5, "{r:?}");
        assert!((r.visibility - 0.8).abs() < 1e-15);

        let r = budget_per_segment(1000.0, 8, 0.9, 125.0).unwrap();
        assert!((r.per_segment_sigma_limit - 0.2362).abs() < 5e-5);
        assert!((r.per_segment_sigma_limit - (0.44629f64 / 8.0).sqrt()).abs() < 1e-5);

        let r = budget_per_segment(80.0, 1, 0.95, 80.0).unwrap();
        assert!((r.per_segment_sigma_limit - sigma_for_fidelity(0.95).unwrap()).abs() < 1e-15);

        assert!(budget_per_segment(1000.0, 8, 1.0, 36.5).is_err());
        assert!(budget_per_segment(1000.0, 8, 0.5, 36.5).is_err());
        assert!(budget_per_segment(1000.0, 8, 0.9, 200.0).is_err());
        assert!(budget_per_segment(1000.0, 0, 0.9, 36.5).is_err());
    }

    #[test]
    fn visibility_prediction() {
        assert!((predict_visibility(8e-4, 250.0).unwrap() - 0.9048).abs() < 5e-5);
        assert_eq!(predict_visibility(0.0, 250.0).unwrap(), 1.0);
        assert!((predict_visibility(8e-4, 71.5).unwrap() - 0.9718).abs() < 5e-5);
        assert!(predict_visibility(-1e-4, 10.0).is_err());
    }

    #[test]
    fn conversions() {
        use Conversion::*;
        assert!(
            (fidelity_visibility_convert(0.9, FidelityToVisibility).unwrap() - 0.8).abs() < 1e-15
        );
        assert_eq!(
            fidelity_visibility_convert(1.0, VisibilityToFidelity).unwrap(),
            1.0
        );
        let f = fidelity_visibility_convert(0.9373, VisibilityToFidelity).unwrap();
        assert!((f - 0.96865).abs() < 1e-12);
        assert!(fidelity_visibility_convert(1.1, VisibilityToFidelity).is_err());
        assert!(fidelity_visibility_convert(0.4, FidelityToVisibility).is_err());
    }
}
