//! Command line, file formats and JSON reports.
//!
//! Traces, fringe scans, mean-phase-change curves and histograms are plain
//! CSV with a magic first line and `# key=value` metadata. Floats are written
//! in shortest round-trip form, so reading a file back is bit-exact.

mod cli;
mod files;
mod presets;
mod report;

pub use cli::*;
pub use files::*;
pub use presets::*;
pub use report::*;
