use fiberphase::analysis::{increment_sets_by_lag, mean_phase_change};
use fiberphase::noise_process::{NoiseParams, PhaseProcess};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

/// Kolmogorov-Smirnov statistic of `xs` against N(0, sigma^2).
fn ks_statistic(mut xs: Vec<f64>, sigma: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).unwrap();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

proptest! {
    #[test]
    fn power_law(sigma in 0.0..2.0f64, tau_ref in 1e-6..1e-3f64, hurst in 0.01..0.99f64,
                 tau in 1e-7..1e-2f64, a in 0.01..100.0f64) {
        let p = PhaseProcess::new(NoiseParams::new(sigma, tau_ref, hurst)).unwrap();
        let lhs = p.sigma_at(a * tau).unwrap();
        let rhs = a.powf(hurst) * p.sigma_at(tau).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn zero_noise_limit(tau in 0.0..1.0f64, hurst in 0.01..0.99f64) {
        let p = PhaseProcess::new(NoiseParams::new(0.0, 1e-4, hurst)).unwrap();
        prop_assert_eq!(p.sigma_at(tau).unwrap(), 0.0);
    }

    #[test]
    fn determinism(seed in any::<u64>(), hurst in prop::sample::select(vec![0.3, 0.5, 0.8])) {
        let p = PhaseProcess::new(NoiseParams::new(0.1, 1e-4, hurst)).unwrap();
        let a = p.sample_trace(1e-3, 2e-6, seed).unwrap();
        let b = p.sample_trace(1e-3, 2e-6, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn drift_superposition(seed in any::<u64>(), drift in -1e4..1e4f64,
                           hurst in prop::sample::select(vec![0.5, 0.75])) {
        let base = NoiseParams::new(0.1, 1e-4, hurst);
        let still = PhaseProcess::new(base).unwrap().sample_trace(1e-3, 2e-6, seed).unwrap();
        let moving = PhaseProcess::new(base.with_drift(drift)).unwrap().sample_trace(1e-3, 2e-6, seed).unwrap();
        for (k, (m, s)) in moving.samples.iter().zip(&still.samples).enumerate() {
            let expected = drift * (k as f64 * 2e-6);
            // Equal up to the rounding of one addition.
            prop_assert!((m - s - expected).abs() <= 4.0 * f64::EPSILON * (m.abs() + s.abs()));
        }
    }
}

#[test]
fn gaussian_increments_brownian() {
    let p = PhaseProcess::new(NoiseParams::new(0.1, 1e-4, 0.5)).unwrap();
    let dt = 1e-6;
    let lag = 10;
    let trace = p.sample_trace(1e4 * lag as f64 * dt, dt, 3).unwrap();
    // Non-overlapping increments are independent for H = 0.5.
    let xs: Vec<f64> = trace
        .samples
        .chunks_exact(lag)
        .zip(trace.samples.chunks_exact(lag).skip(1))
        .map(|(a, b)| b[0] - a[0])
        .collect();
    assert!(xs.len() >= 9_999);
    let d = ks_statistic(xs.clone(), p.sigma_at(lag as f64 * dt).unwrap());
    assert!(d < ks_critical_1pct(xs.len()), "KS {d}");
}

#[test]
fn gaussian_increments_fractional() {
    for (hurst, seed) in [(0.3, 4), (0.8, 5)] {
        let p = PhaseProcess::new(NoiseParams::new(0.1, 1e-4, hurst)).unwrap();
        let dt = 2e-6;
        let lag = 25;
        // Independent short realizations, one increment each.
        let xs: Vec<f64> = p
            .sample_traces(lag as f64 * dt, dt, seed, 10_000)
            .unwrap()
            .iter()
            .map(|t| t.samples[lag] - t.samples[0])
            .collect();
        let d = ks_statistic(xs, p.sigma_at(lag as f64 * dt).unwrap());
        assert!(d < ks_critical_1pct(10_000), "H={hurst}: KS {d}");
    }
}

#[test]
fn lag_std_matches_generator() {
    let p = PhaseProcess::new(NoiseParams::new(0.05, 2e-6, 0.5)).unwrap();
    let dt = 2e-6;
    let trace = p.sample_trace(((1 << 16) - 1) as f64 * dt, dt, 6).unwrap();
    assert_eq!(trace.len(), 1 << 16);
    let lags = [1, 4, 16, 64];
    let stats = mean_phase_change(&increment_sets_by_lag(&trace, &lags).unwrap()).unwrap();
    for (i, &k) in lags.iter().enumerate() {
        let expected = p.sigma_at(k as f64 * dt).unwrap();
        let rel = (stats.sigma_per_tau[i] - expected) / expected;
        assert!(rel.abs() < 0.03, "lag {k}: {rel}");
    }
}

#[test]
fn long_fractional_traces_have_the_generator_variance() {
    // Past the direct-factorization size. One increment per realization
    // keeps the samples independent despite long-range dependence.
    let p = PhaseProcess::new(NoiseParams::new(0.05, 1e-6, 0.9)).unwrap();
    let traces = p.sample_traces(4095e-6, 1e-6, 8, 2000).unwrap();
    for (start, k) in [(0, 1), (1000, 8), (2048, 64), (3000, 1000)] {
        let ms = traces
            .iter()
            .map(|t| (t.samples[start + k] - t.samples[start]).powi(2))
            .sum::<f64>()
            / traces.len() as f64;
        let expected = p.sigma_at(k as f64 * 1e-6).unwrap();
        let rel = (ms.sqrt() - expected) / expected;
        assert!(rel.abs() < 0.05, "lag {k} at {start}: {rel}");
    }
}
