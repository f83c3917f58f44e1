//! Exact synthesis of unit-variance fractional gaussian noise.
//!
//! Long records use circulant embedding of the autocovariance (Davies and
//! Harte); short ones, and any record whose embedding is not non-negative
//! definite, use a Cholesky factor of the full covariance matrix.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Longest fractional record that will be synthesized (increments).
pub const MAX_SYNTHESIS_INCREMENTS: usize = 1 << 22;

/// Records up to this many increments are factorized directly.
pub const CHOLESKY_MAX_INCREMENTS: usize = 256;

/// Largest record for which the O(n^3) fallback is attempted when the
/// circulant embedding fails.
const CHOLESKY_FALLBACK_LIMIT: usize = 2048;

/// Autocovariance of unit-variance fractional gaussian noise at integer lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

pub(super) fn fractional_gaussian_noise<R: Rng + ?Sized>(
    n: usize,
    hurst: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n > MAX_SYNTHESIS_INCREMENTS {
        return Err(Error::Resource(format!(
            "{n} fractional increments requested, limit is {MAX_SYNTHESIS_INCREMENTS}"
        )));
    }
    if n <= CHOLESKY_MAX_INCREMENTS {
        return cholesky(n, hurst, rng);
    }
    match circulant_eigenvalues(n, hurst) {
        Some(eigen) => Ok(circulant(n, &eigen, rng)),
        None if n <= CHOLESKY_FALLBACK_LIMIT => cholesky(n, hurst, rng),
        None => Err(Error::Resource(format!(
            "circulant embedding of {n} increments at hurst {hurst} is not non-negative definite"
        ))),
    }
}

/// Eigenvalues of the minimal circulant embedding (size 2n), or `None` if
/// any is materially negative.
fn circulant_eigenvalues(n: usize, hurst: f64) -> Option<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex64::new(fgn_autocovariance(lag, hurst), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);

    let scale = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut eigen = Vec::with_capacity(m);
    for c in row {
        if c.re < -1e-10 * scale {
            return None;
        }
        eigen.push(c.re.max(0.0));
    }
    Some(eigen)
}

fn circulant<R: Rng + ?Sized>(n: usize, eigen: &[f64], rng: &mut R) -> Vec<f64> {
    let m = eigen.len();
    let mut w: Vec<Complex64> = eigen
        .iter()
        .map(|&lambda| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * (lambda / m as f64).sqrt()
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut w);
    // Real and imaginary parts are independent copies with the target
    // covariance; the imaginary one is discarded.
    w.truncate(n);
    w.into_iter().map(|c| c.re).collect()
}

fn cholesky<R: Rng + ?Sized>(n: usize, hurst: f64, rng: &mut R) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst)).collect();
    // Row-major lower triangle.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gamma[i - j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Resource(format!(
                        "fractional covariance of {n} increments is numerically singular"
                    )));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    Ok((0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn autocovariance_at_half_is_white() {
        assert_eq!(fgn_autocovariance(0, 0.5), 1.0);
        for k in 1..10 {
            assert!(fgn_autocovariance(k, 0.5).abs() < 1e-15);
        }
        assert!(fgn_autocovariance(1, 0.8) > 0.0);
        assert!(fgn_autocovariance(1, 0.3) < 0.0);
    }

    #[test]
    fn embedding_is_valid_across_hurst_range() {
        for &h in &[0.05, 0.3, 0.7, 0.9, 0.95] {
            assert!(circulant_eigenvalues(1000, h).is_some(), "hurst {h}");
        }
    }

    /// Sample lag-1 autocorrelation pooled over many short circulant records
    /// must match the closed form.
    #[test]
    fn circulant_reproduces_lag_one_covariance() {
        let (n, reps, h) = (300, 400, 0.8);
        let eigen = circulant_eigenvalues(n, h).unwrap();
        let mut rng = stream_rng(11, 0);
        let (mut c0, mut c1, mut count0, mut count1) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..reps {
            let x = circulant(n, &eigen, &mut rng);
            c0 += x.iter().map(|v| v * v).sum::<f64>();
            c1 += x.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
            count0 += n as f64;
            count1 += (n - 1) as f64;
        }
        let (var, cov) = (c0 / count0, c1 / count1);
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!((cov - fgn_autocovariance(1, h)).abs() < 0.03, "cov {cov}");
    }

    #[test]
    fn cholesky_reproduces_lag_one_covariance() {
        let (n, reps, h) = (64, 4000, 0.3);
        let mut rng = stream_rng(12, 0);
        let (mut c0, mut c1) = (0.0, 0.0);
        for _ in 0..reps {
            let x = cholesky(n, h, &mut rng).unwrap();
            c0 += x[10] * x[10];
            c1 += x[10] * x[11];
        }
        let (var, cov) = (c0 / reps as f64, c1 / reps as f64);
        assert!((var - 1.0).abs() < 0.07, "var {var}");
        assert!((cov - fgn_autocovariance(1, h)).abs() < 0.06, "cov {cov}");
    }
}
