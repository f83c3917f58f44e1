use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::FringeScan;

/// Sinusoid `offset + cos_amp*cos(phi) + sin_amp*sin(phi)` fitted to a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
    pub visibility: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    pub fn amplitude(&self) -> f64 {
        self.cos_amp.hypot(self.sin_amp)
    }

    pub fn evaluate(&self, phase: f64) -> f64 {
        self.offset + self.cos_amp * phase.cos() + self.sin_amp * phase.sin()
    }
}

/// Linear least-squares sinusoid fit at the known fringe period, after
/// removing the detector offset.
pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit> {
    scan.validate()?;
    let rows: Vec<[f64; 3]> = scan
        .applied_phase
        .iter()
        .map(|&p| [1.0, p.cos(), p.sin()])
        .collect();
    let signal: Vec<f64> = scan
        .pulse_area
        .iter()
        .map(|a| a - scan.detector_noise)
        .collect();

    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (row, &y) in rows.iter().zip(&signal) {
        for i in 0..3 {
            rhs[i] += row[i] * y;
            for j in 0..3 {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    let [offset, cos_amp, sin_amp] = solve3(normal, rhs).ok_or_else(|| {
        Error::Fit("applied phases do not resolve a sinusoid (singular design)".into())
    })?;

    if offset <= 0.0 {
        return Err(Error::Fit(format!(
            "fitted offset {offset} is not positive after detector-noise subtraction"
        )));
    }
    let sum_sq: f64 = rows
        .iter()
        .zip(&signal)
        .map(|(r, &y)| {
            let e = y - (offset * r[0] + cos_amp * r[1] + sin_amp * r[2]);
            e * e
        })
        .sum();

    Ok(FringeFit {
        offset,
        cos_amp,
        sin_amp,
        visibility: cos_amp.hypot(sin_amp) / offset,
        residual_rms: (sum_sq / rows.len() as f64).sqrt(),
    })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in col + 1..3 {
            let f = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scan_with(visibility: f64, noise: f64, phases: Vec<f64>) -> FringeScan {
        let pulse_area = phases
            .iter()
            .map(|p| 0.5 * (1.0 + visibility * (p + 0.4).cos()) + noise)
            .collect();
        FringeScan {
            applied_phase: phases,
            pulse_area,
            detector_noise: noise,
            i0: 1.0,
        }
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn exact_on_noiseless_scans() {
        for &v in &[0.0, 0.25, 0.992, 1.0] {
            let fit = fit_fringe(&scan_with(v, 0.03, grid(50))).unwrap();
            assert!((fit.visibility - v).abs() < 1e-12, "{v}: {fit:?}");
            assert!(fit.residual_rms < 1e-12);
            assert!((fit.offset - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn works_on_non_uniform_grids() {
        let phases: Vec<f64> = (0..7)
            .map(|k| 0.9 * k as f64 + 0.01 * (k * k) as f64)
            .collect();
        let fit = fit_fringe(&scan_with(0.8, 0.0, phases)).unwrap();
        assert!((fit.visibility - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let err = fit_fringe(&scan_with(0.9, 0.0, vec![1.0; 6])).unwrap_err();
        assert!(matches!(err, Error::Fit(_)), "{err}");
        let err = fit_fringe(&scan_with(0.9, 0.0, vec![0.0, PI, 0.0, PI])).unwrap_err();
        assert!(matches!(err, Error::Fit(_)), "{err}");
        assert!(fit_fringe(&scan_with(0.9, 0.0, grid(3))).is_err());
    }

    #[test]
    fn non_positive_offset_is_a_fit_error() {
        let mut scan = scan_with(0.5, 0.0, grid(10));
        scan.detector_noise = 10.0;
        assert!(matches!(fit_fringe(&scan), Err(Error::Fit(_))));
    }
}
