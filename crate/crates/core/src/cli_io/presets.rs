//! Day and night calibrations of the 36.5 km installed-fiber link.
//!
//! Both presets are anchored on the lag at which the mean absolute phase
//! change of the Mach-Zehnder record reaches 0.1 rad: about 100 us by day
//! and 350 us at night. The scaling exponent is 0.8, the middle of the
//! 0.7-0.9 band seen in installed fiber.

use serde::{Deserialize, Serialize};

use crate::analysis::gaussian_mean_abs;
use crate::noise_process::{NoiseParams, DEFAULT_GROUP_INDEX};

/// Arm length of the installed Mach-Zehnder link (km).
pub const LINK_LENGTH_KM: f64 = 36.5;

/// Scaling exponent used by both presets.
pub const PRESET_HURST: f64 = 0.8;

/// Mean phase change that defines the anchoring lag (rad).
pub const ANCHOR_DPHI: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Day,
    Night,
}

impl Preset {
    /// Lag at which the mean absolute phase change reaches [`ANCHOR_DPHI`] (s).
    pub fn tau_anchor(self) -> f64 {
        match self {
            Preset::Day => 100e-6,
            Preset::Night => 350e-6,
        }
    }

    pub fn params(self) -> NoiseParams {
        NoiseParams {
            sigma_ref: ANCHOR_DPHI / gaussian_mean_abs(1.0),
            tau_ref: self.tau_anchor(),
            hurst: PRESET_HURST,
            drift_rate: 0.0,
            length_km: LINK_LENGTH_KM,
            group_index: DEFAULT_GROUP_INDEX,
        }
    }
}
