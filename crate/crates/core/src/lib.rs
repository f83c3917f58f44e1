//! Phase noise in long optical fibers.
//!
//! The crate generates calibrated stochastic phase processes, forward-models
//! Sagnac and Mach-Zehnder interferometers, recovers phase statistics from
//! intensity records and turns them into quantum-repeater fidelity budgets.
//!
//! ```
//! use fiberphase::noise_process::{NoiseParams, PhaseProcess};
//! use fiberphase::interferometer::visibility_from_sigma;
//!
//! let process = PhaseProcess::new(NoiseParams::new(0.1, 100e-6, 0.5)).unwrap();
//! let sigma = process.sigma_at(400e-6).unwrap();
//! assert!((sigma - 0.2).abs() < 1e-12);
//! assert!(visibility_from_sigma(sigma).unwrap() > 0.98);
//! ```

pub mod analysis;
pub mod cli_io;
pub mod error;
pub mod interferometer;
pub mod noise_process;
pub mod repeater;
pub mod rng;

pub use error::{Error, Result};
