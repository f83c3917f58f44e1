use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::files::write_atomic;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "v1";
pub const TOOL_NAME: &str = "fiberphase";

/// Significant digits kept for every float in a report.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputProvenance {
    pub path: String,
    pub sha256: String,
}

impl InputProvenance {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub tool: String,
    pub version: String,
    /// The complete run configuration, defaults included.
    pub config: Value,
    pub results: BTreeMap<String, Value>,
    pub inputs: Vec<InputProvenance>,
}

impl ReportDocument {
    pub fn new(config: Value) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            results: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn add_result<T: Serialize>(&mut self, name: &str, block: &T) -> Result<()> {
        let value = serde_json::to_value(block)
            .map_err(|e| Error::Undefined(format!("result `{name}` is not serializable: {e}")))?;
        self.results.insert(name.to_string(), value);
        Ok(())
    }

    /// Canonical JSON: sorted keys, floats rounded to
    /// [`REPORT_DIGITS`] significant digits, trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)
            .map_err(|e| Error::Undefined(format!("report is not serializable: {e}")))?;
        round_floats(&mut value);
        let mut text = serde_json::to_string_pretty(&value)
            .map_err(|e| Error::Undefined(format!("report is not serializable: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}

pub fn write_report(path: impl AsRef<Path>, report: &ReportDocument) -> Result<()> {
    write_atomic(path.as_ref(), report.to_json()?.as_bytes())
}

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *value = serde_json::Number::from_f64(round_sig(x, REPORT_DIGITS))
                    .map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
