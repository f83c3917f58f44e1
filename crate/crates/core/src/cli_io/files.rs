//! Plain-text file formats.
//!
//! Every file starts with a `# fiberphase-<kind> v1` line, followed by
//! optional `# key=value` metadata lines, a column header, and comma
//! separated rows. Floats are written in their shortest round-trip form, so
//! reading a written file gives back the same bits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::ops::Range;
use std::path::Path;

use crate::analysis::{Histogram, PhaseStats};
use crate::error::{Error, Result};
use crate::interferometer::{FringeScan, IntensityTrace};
use crate::noise_process::PhaseTrace;

pub const TRACE_MAGIC: &str = "# fiberphase-trace v1";
pub const FRINGE_MAGIC: &str = "# fiberphase-fringe v1";
pub const DPHI_MAGIC: &str = "# fiberphase-dphi v1";
pub const HISTOGRAM_MAGIC: &str = "# fiberphase-histogram v1";

const TRACE_COLUMNS: &str = "time_s,value";
const FRINGE_COLUMNS: &str = "applied_phase_rad,pulse_area";
const DPHI_COLUMNS: &str = "tau_s,mean_abs_change_rad,sigma_rad,n_increments";
const HISTOGRAM_COLUMNS: &str = "bin_center,count";

/// A time series on disk: either a recovered phase or a detector record.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    Phase(PhaseTrace),
    Intensity(IntensityTrace),
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Replaces `path` with `contents` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("not a file path")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

fn format_segments(segments: &[Range<usize>]) -> String {
    segments
        .iter()
        .map(|r| format!("{}-{}", r.start, r.end))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn format_trace(record: &TraceRecord) -> String {
    let mut out = String::new();
    let (t0, dt, samples) = match record {
        TraceRecord::Phase(p) => (p.t0, p.dt, &p.samples),
        TraceRecord::Intensity(i) => (i.t0, i.dt, &i.samples),
    };
    out.push_str(TRACE_MAGIC);
    out.push('\n');
    match record {
        TraceRecord::Phase(p) => {
            out.push_str("# kind=phase\n");
            let _ = writeln!(out, "# segments={}", format_segments(&p.segments));
        }
        TraceRecord::Intensity(i) => {
            out.push_str("# kind=intensity\n");
            let _ = writeln!(out, "# i_max={}", num(i.i_max));
            let _ = writeln!(out, "# i_min={}", num(i.i_min));
        }
    }
    let _ = writeln!(out, "# t0={}", num(t0));
    let _ = writeln!(out, "# dt={}", num(dt));
    out.push_str(TRACE_COLUMNS);
    out.push('\n');
    for (k, &v) in samples.iter().enumerate() {
        let _ = writeln!(out, "{},{}", num(t0 + k as f64 * dt), num(v));
    }
    out
}

pub fn write_trace(path: impl AsRef<Path>, record: &TraceRecord) -> Result<()> {
    write_atomic(path.as_ref(), format_trace(record).as_bytes())
}

/// Lines of a v1 file after the magic line: metadata, then data rows
/// (column header checked and skipped).
struct Parsed {
    meta: Vec<(String, String, usize)>,
    rows: Vec<(Vec<f64>, usize)>,
}

impl Parsed {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.meta
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }
}

fn parse_file(path: &Path, text: &str, magic: &str, columns: &str) -> Result<Parsed> {
    let name = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, first)) if first == magic => {}
        Some((n, first)) => {
            return Err(err(
                n,
                format!("expected header `{magic}`, found `{first}`"),
            ))
        }
        None => return Err(err(1, format!("empty file, expected header `{magic}`"))),
    }

    let width = columns.split(',').count();
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_columns {
                continue;
            }
            let rest = rest.trim();
            // Lines without `=` are free-form comments.
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string(), n));
            }
            continue;
        }
        if !seen_columns {
            if line.trim() != columns {
                return Err(err(
                    n,
                    format!("expected column header `{columns}`, found `{line}`"),
                ));
            }
            seen_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(err(
                n,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| err(n, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((values, n));
    }
    if !seen_columns {
        return Err(err(
            text.lines().count().max(1),
            format!("missing column header `{columns}`"),
        ));
    }
    Ok(Parsed { meta, rows })
}

fn meta_f64(parsed: &Parsed, path: &Path, key: &str) -> Result<Option<f64>> {
    match parsed.get(key) {
        None => Ok(None),
        Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("metadata `{key}` has non-numeric value `{v}`"),
        }),
    }
}

fn parse_segments(text: &str, path: &Path, line: usize) -> Result<Vec<Range<usize>>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|part| {
            let bad = || Error::Parse {
                path: path.display().to_string(),
                line,
                message: format!("malformed segment `{part}`, expected start-end"),
            };
            let (a, b) = part.split_once('-').ok_or_else(bad)?;
            let start = a.trim().parse::<usize>().map_err(|_| bad())?;
            let end = b.trim().parse::<usize>().map_err(|_| bad())?;
            Ok(start..end)
        })
        .collect()
}

pub fn parse_trace(path: &Path, text: &str) -> Result<TraceRecord> {
    let parsed = parse_file(path, text, TRACE_MAGIC, TRACE_COLUMNS)?;
    let name = path.display().to_string();
    let times: Vec<f64> = parsed.rows.iter().map(|(r, _)| r[0]).collect();
    let samples: Vec<f64> = parsed.rows.iter().map(|(r, _)| r[1]).collect();

    let t0 = match meta_f64(&parsed, path, "t0")? {
        Some(t) => t,
        None => times.first().copied().unwrap_or(0.0),
    };
    let dt = match meta_f64(&parsed, path, "dt")? {
        Some(dt) => dt,
        None if times.len() >= 2 => (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64,
        None => {
            return Err(Error::Parse {
                path: name,
                line: 1,
                message: "sample interval unknown: no `dt` metadata and fewer than two rows".into(),
            })
        }
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parse {
            path: name,
            line: parsed.get("dt").map_or(1, |(_, l)| l),
            message: format!("sample interval must be positive, got {dt}"),
        });
    }
    for (k, &(ref row, line)) in parsed.rows.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (row[0] - expected).abs() > 1e-3 * dt {
            return Err(Error::Parse {
                path: name,
                line,
                message: format!(
                    "time {} is off the uniform grid (expected {expected})",
                    row[0]
                ),
            });
        }
    }

    let kind = parsed.get("kind").map(|(k, _)| k).unwrap_or("intensity");
    match kind {
        "phase" => {
            let segments = match parsed.get("segments") {
                Some((s, line)) => parse_segments(s, path, line)?,
                None if samples.is_empty() => Vec::new(),
                None => std::iter::once(0..samples.len()).collect(),
            };
            let trace =
                PhaseTrace::with_segments(t0, dt, samples, segments).map_err(|e| Error::Parse {
                    path: name,
                    line: 1,
                    message: e.to_string(),
                })?;
            Ok(TraceRecord::Phase(trace))
        }
        "intensity" => {
            // Without calibration metadata the recorded extremes are used.
            let i_max = meta_f64(&parsed, path, "i_max")?
                .unwrap_or_else(|| samples.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let i_min = meta_f64(&parsed, path, "i_min")?
                .unwrap_or_else(|| samples.iter().copied().fold(f64::INFINITY, f64::min));
            Ok(TraceRecord::Intensity(IntensityTrace {
                t0,
                dt,
                samples,
                i_max,
                i_min,
            }))
        }
        other => Err(Error::Parse {
            path: name,
            line: parsed.get("kind").map_or(1, |(_, l)| l),
            message: format!("unknown trace kind `{other}`"),
        }),
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(path, &text)
}

pub fn read_phase_trace(path: impl AsRef<Path>) -> Result<PhaseTrace> {
    match read_trace(path.as_ref())? {
        TraceRecord::Phase(p) => Ok(p),
        TraceRecord::Intensity(_) => Err(Error::Parse {
            path: path.as_ref().display().to_string(),
            line: 1,
            message: "expected a phase trace (kind=phase), found an intensity trace".into(),
        }),
    }
}

pub fn read_intensity_trace(path: impl AsRef<Path>) -> Result<IntensityTrace> {
    match read_trace(path.as_ref())? {
        TraceRecord::Intensity(i) => Ok(i),
        TraceRecord::Phase(_) => Err(Error::Parse {
            path: path.as_ref().display().to_string(),
            line: 1,
            message: "expected an intensity trace, found a phase trace".into(),
        }),
    }
}

pub fn format_fringe(scan: &FringeScan) -> String {
    let mut out = format!(
        "{FRINGE_MAGIC}\n# i0={}\n# detector_noise={}\n{FRINGE_COLUMNS}\n",
        num(scan.i0),
        num(scan.detector_noise)
    );
    for (&p, &a) in scan.applied_phase.iter().zip(&scan.pulse_area) {
        let _ = writeln!(out, "{},{}", num(p), num(a));
    }
    out
}

pub fn write_fringe(path: impl AsRef<Path>, scan: &FringeScan) -> Result<()> {
    write_atomic(path.as_ref(), format_fringe(scan).as_bytes())
}

pub fn read_fringe(path: impl AsRef<Path>) -> Result<FringeScan> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_file(path, &text, FRINGE_MAGIC, FRINGE_COLUMNS)?;
    let max_area = parsed.rows.iter().map(|(r, _)| r[1]).fold(0.0, f64::max);
    Ok(FringeScan {
        applied_phase: parsed.rows.iter().map(|(r, _)| r[0]).collect(),
        pulse_area: parsed.rows.iter().map(|(r, _)| r[1]).collect(),
        detector_noise: meta_f64(&parsed, path, "detector_noise")?.unwrap_or(0.0),
        i0: meta_f64(&parsed, path, "i0")?.unwrap_or(max_area),
    })
}

pub fn format_dphi(stats: &PhaseStats) -> String {
    let mut out = format!("{DPHI_MAGIC}\n{DPHI_COLUMNS}\n");
    for i in 0..stats.taus.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(stats.taus[i]),
            num(stats.mean_abs_change[i]),
            num(stats.sigma_per_tau[i]),
            stats.n_increments[i]
        );
    }
    out
}

pub fn write_dphi(path: impl AsRef<Path>, stats: &PhaseStats) -> Result<()> {
    write_atomic(path.as_ref(), format_dphi(stats).as_bytes())
}

/// Reads a mean-phase-change curve. Histogram and exponent fits are not
/// stored in the file and come back empty.
pub fn read_dphi(path: impl AsRef<Path>) -> Result<PhaseStats> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_file(path, &text, DPHI_MAGIC, DPHI_COLUMNS)?;
    let mut stats = PhaseStats {
        taus: Vec::new(),
        mean_abs_change: Vec::new(),
        sigma_per_tau: Vec::new(),
        n_increments: Vec::new(),
        histogram: None,
        scaling_exponent: None,
    };
    for (row, line) in &parsed.rows {
        let count = row[3];
        if count < 1.0 || count.fract() != 0.0 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: *line,
                message: format!("increment count must be a positive integer, got {count}"),
            });
        }
        if stats.taus.last().is_some_and(|&t| row[0] <= t) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: *line,
                message: "lags must be strictly increasing".into(),
            });
        }
        stats.taus.push(row[0]);
        stats.mean_abs_change.push(row[1]);
        stats.sigma_per_tau.push(row[2]);
        stats.n_increments.push(count as usize);
    }
    Ok(stats)
}

pub fn format_histogram(h: &Histogram, tau: f64) -> String {
    let mut out = format!(
        "{HISTOGRAM_MAGIC}\n# tau_s={}\n{HISTOGRAM_COLUMNS}\n",
        num(tau)
    );
    for (c, n) in h.centers().iter().zip(&h.counts) {
        let _ = writeln!(out, "{},{}", num(*c), n);
    }
    out
}

pub fn write_histogram(path: impl AsRef<Path>, h: &Histogram, tau: f64) -> Result<()> {
    write_atomic(path.as_ref(), format_histogram(h, tau).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn empty_trace_is_header_only() {
        let rec = TraceRecord::Phase(PhaseTrace::new(0.0, 2e-6, vec![]));
        let text = format_trace(&rec);
        assert!(text.starts_with("# fiberphase-trace v1\n"));
        assert!(text.ends_with("time_s,value\n"));
        assert_eq!(parse_trace(p(), &text).unwrap(), rec);
    }

    #[test]
    fn three_sample_round_trip() {
        let rec = TraceRecord::Intensity(IntensityTrace {
            t0: 1e-3,
            dt: 2e-6,
            samples: vec![0.1, 1.0 / 3.0, 0.7000000000000001],
            i_max: 0.95,
            i_min: 0.05,
        });
        assert_eq!(parse_trace(p(), &format_trace(&rec)).unwrap(), rec);
    }

    #[test]
    fn bare_oscilloscope_export_is_read_as_intensity() {
        let text = "# fiberphase-trace v1\ntime_s,value\n0,0.2\n0.000002,0.9\n0.000004,0.4\n";
        match parse_trace(p(), text).unwrap() {
            TraceRecord::Intensity(t) => {
                assert_eq!(t.i_max, 0.9);
                assert_eq!(t.i_min, 0.2);
                assert!((t.dt - 2e-6).abs() < 1e-18);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_files_report_line_numbers() {
        let cases = [
            ("# other v1\ntime_s,value\n", 1),
            ("# fiberphase-trace v1\n# dt=1\ntime,value\n", 3),
            (
                "# fiberphase-trace v1\n# dt=1\ntime_s,value\n0,1\n1,abc\n",
                5,
            ),
            ("# fiberphase-trace v1\n# dt=1\ntime_s,value\n0,1,2\n", 4),
            ("# fiberphase-trace v1\n# dt=1\ntime_s,value\n0,1\n7,1\n", 5),
            ("# fiberphase-trace v1\n# dt=x\ntime_s,value\n", 2),
            (
                "# fiberphase-trace v1\n# kind=phase\n# segments=0-a\n# dt=1\ntime_s,value\n0,1\n",
                3,
            ),
        ];
        for (text, line) in cases {
            match parse_trace(p(), text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn dphi_rows_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(
            &path,
            format!("{DPHI_MAGIC}\n{DPHI_COLUMNS}\n2e-6,0.1,0.1,10\n1e-6,0.1,0.1,10\n"),
        )
        .unwrap();
        assert!(matches!(
            read_dphi(&path),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("t.csv");
        write_trace(
            &path,
            &TraceRecord::Phase(PhaseTrace::new(0.0, 1.0, vec![1.0])),
        )
        .unwrap();
        let names: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("t.csv")]);
    }
}
