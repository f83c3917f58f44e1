use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::files::{
    read_dphi, read_fringe, read_intensity_trace, read_phase_trace, write_dphi, write_fringe,
    write_histogram, write_trace, TraceRecord,
};
use super::presets::Preset;
use super::report::{write_report, InputProvenance, ReportDocument};
use crate::analysis::{
    check_gaussian_relation, estimate_diffusion, extract_phase, fit_fringe, fit_gaussian,
    fit_scaling_exponent, increment_sets_by_lag, lag_for, lag_grid_up_to, mean_phase_change,
    tau_threshold, IncrementSets, PhaseWidth, SlopeBand,
};
use crate::error::{Error, Result};
use crate::interferometer::{
    sagnac_effective_sigma, simulate_fringe_scan, simulate_mz_trace, visibility_from_sigma,
    FringeScanConfig, MzSetup,
};
use crate::noise_process::{NoiseParams, PhaseProcess};
use crate::repeater::{budget_per_segment, fidelity_from_sigma, monte_carlo_fidelity};
use crate::rng::DEFAULT_SEED;

/// Relative output paths are resolved under this directory when it is set.
pub const OUT_DIR_ENV: &str = "FIBERPHASE_OUT_DIR";

/// Simulate and analyze phase noise in long fiber interferometers.
///
/// Time flags are in microseconds and lengths in kilometres; files always
/// hold SI seconds and radians.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "fiberphase", version)]
pub struct RunConfig {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write a JSON report of the run here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate synthetic records.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Analyze recorded or simulated data.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Quantum-repeater phase budgets.
    #[command(subcommand)]
    Repeater(RepeaterCommand),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateCommand {
    /// Phase trace of the noise process.
    #[command(allow_negative_numbers = true)]
    Noise(SimulateNoise),
    /// Sagnac fringe scan.
    #[command(allow_negative_numbers = true)]
    Fringe(SimulateFringe),
    /// Mach-Zehnder intensity record.
    #[command(allow_negative_numbers = true)]
    Mz(SimulateMz),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzeCommand {
    /// Sinusoidal fit of a fringe scan.
    #[command(allow_negative_numbers = true)]
    Fringe(AnalyzeFringe),
    /// Phase extraction from a Mach-Zehnder intensity record.
    #[command(allow_negative_numbers = true)]
    Phase(AnalyzePhase),
    /// Mean absolute phase change against lag.
    #[command(allow_negative_numbers = true)]
    Dphi(AnalyzeDphi),
    /// Lag at which the mean phase change reaches a target.
    #[command(allow_negative_numbers = true)]
    TauThreshold(AnalyzeTauThreshold),
    /// Power-law exponent of the mean phase change.
    #[command(allow_negative_numbers = true)]
    Exponent(AnalyzeExponent),
    /// Diffusion coefficient from a Sagnac visibility or phase width.
    #[command(allow_negative_numbers = true)]
    Diffusion(AnalyzeDiffusion),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepeaterCommand {
    /// Per-segment phase allowance for a target end-to-end fidelity.
    #[command(allow_negative_numbers = true)]
    Budget(RepeaterBudget),
    /// Fidelity of one link for a given phase width.
    #[command(allow_negative_numbers = true)]
    Fidelity(RepeaterFidelity),
}

/// Exactly one way of calibrating the noise process.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct Calibration {
    /// Increment standard deviation at --tau-ref-us (rad).
    #[arg(long)]
    pub sigma_ref: Option<f64>,
    /// Diffusion coefficient (rad^2/km) measured on a Sagnac loop of --calibration-km.
    #[arg(long)]
    pub diffusion: Option<f64>,
    /// Night-time installed-fiber calibration.
    #[arg(long)]
    pub night: bool,
    /// Day-time installed-fiber calibration.
    #[arg(long)]
    pub day: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub calibration: Calibration,
    /// Reference lag for --sigma-ref (us).
    #[arg(long, default_value_t = 100.0)]
    pub tau_ref_us: f64,
    /// Sagnac loop length behind --diffusion (km).
    #[arg(long, default_value_t = 71.5)]
    pub calibration_km: f64,
    /// Scaling exponent; 0.5 by default, 0.8 for the day/night presets.
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Linear phase drift (rad/s).
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Fiber length (km).
    #[arg(long, default_value_t = 36.5)]
    pub length_km: f64,
    #[arg(long, default_value_t = crate::noise_process::DEFAULT_GROUP_INDEX)]
    pub group_index: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateNoise {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 2000.0)]
    pub duration_us: f64,
    #[arg(long, default_value_t = 2.0)]
    pub dt_us: f64,
    /// Output phase trace (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateFringe {
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Sagnac loop length (km).
    #[arg(long, default_value_t = 71.5)]
    pub loop_km: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 10_000)]
    pub pulses: usize,
    #[arg(long, default_value_t = 0.0)]
    pub detector_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub i0: f64,
    #[arg(long, default_value_t = 1)]
    pub fringes: usize,
    /// Output fringe scan (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateMz {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 2000.0)]
    pub duration_us: f64,
    #[arg(long, default_value_t = 2.0)]
    pub dt_us: f64,
    #[arg(long, default_value_t = 1.0)]
    pub i_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i_min: f64,
    /// Static arm phase offset (rad).
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub phi0: f64,
    /// Output intensity trace (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeFringe {
    /// Fringe scan (CSV).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzePhase {
    /// Intensity trace (CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Lower edge of the normalized-intensity slope band.
    #[arg(long, default_value_t = 0.2)]
    pub band_lo: f64,
    /// Upper edge of the normalized-intensity slope band.
    #[arg(long, default_value_t = 0.8)]
    pub band_hi: f64,
    /// Output phase trace (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeDphi {
    /// Phase traces (CSV); increments are pooled across them.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Largest lag (us).
    #[arg(long, default_value_t = 1000.0)]
    pub tau_max_us: f64,
    /// Output curve (CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lag at which to histogram the increments (us).
    #[arg(long)]
    pub histogram_tau_us: Option<f64>,
    /// Histogram bins; ceil(sqrt(n)) by default.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Output histogram (CSV).
    #[arg(long, requires = "histogram_tau_us")]
    pub histogram_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeTauThreshold {
    /// Mean phase change curve (CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Target mean phase change (rad).
    #[arg(long, default_value_t = 0.1)]
    pub dphi: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeExponent {
    /// Mean phase change curve (CSV).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub tau_min_us: f64,
    #[arg(long)]
    pub tau_max_us: f64,
}

/// Exactly one measure of the Sagnac phase width.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct WidthArgs {
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Phase width (rad).
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeDiffusion {
    #[command(flatten)]
    pub width: WidthArgs,
    /// Sagnac loop length (km).
    #[arg(long)]
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RepeaterBudget {
    #[arg(long)]
    pub total_km: f64,
    #[arg(long)]
    pub links: usize,
    #[arg(long)]
    pub fidelity: f64,
    #[arg(long)]
    pub segment_km: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RepeaterFidelity {
    /// Phase width (rad).
    #[arg(long)]
    pub sigma: f64,
    /// Monte Carlo samples; 0 for the closed form only.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

pub fn parse_cli<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

/// What a run produced, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summaries: Vec<String>,
    pub report: ReportDocument,
}

/// Parses `argv`, runs, prints summaries and errors; returns the exit code
/// (0 success, 1 domain or I/O error, 2 usage error).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_cli(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for line in outcome.summaries {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one configuration: computes, writes every output file and the
/// optional report.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let echo = serde_json::to_value(config)
        .map_err(|e| Error::Undefined(format!("configuration is not serializable: {e}")))?;
    let mut ctx = Ctx {
        seed: config.seed,
        report: ReportDocument::new(echo),
        summaries: Vec::new(),
    };
    match &config.command {
        Command::Simulate(SimulateCommand::Noise(a)) => simulate_noise(&mut ctx, a)?,
        Command::Simulate(SimulateCommand::Fringe(a)) => simulate_fringe(&mut ctx, a)?,
        Command::Simulate(SimulateCommand::Mz(a)) => simulate_mz(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::Fringe(a)) => analyze_fringe(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::Phase(a)) => analyze_phase(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::Dphi(a)) => analyze_dphi(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::TauThreshold(a)) => analyze_tau_threshold(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::Exponent(a)) => analyze_exponent(&mut ctx, a)?,
        Command::Analyze(AnalyzeCommand::Diffusion(a)) => analyze_diffusion(&mut ctx, a)?,
        Command::Repeater(RepeaterCommand::Budget(a)) => repeater_budget(&mut ctx, a)?,
        Command::Repeater(RepeaterCommand::Fidelity(a)) => repeater_fidelity(&mut ctx, a)?,
    }
    if let Some(path) = &config.report {
        write_report(output_path(path), &ctx.report)?;
    }
    Ok(RunOutcome {
        summaries: ctx.summaries,
        report: ctx.report,
    })
}

struct Ctx {
    seed: u64,
    report: ReportDocument,
    summaries: Vec<String>,
}

impl Ctx {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.report.inputs.push(InputProvenance::of(path)?);
        Ok(())
    }
}

pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn check(flag: &'static str, value: f64, ok: bool, rule: &str) -> Result<f64> {
    if value.is_finite() && ok {
        Ok(value)
    } else {
        Err(Error::domain(flag, format!("{rule}, got {value}")))
    }
}

fn positive(flag: &'static str, value: f64) -> Result<f64> {
    check(flag, value, value > 0.0, "must be > 0")
}

fn non_negative(flag: &'static str, value: f64) -> Result<f64> {
    check(flag, value, value >= 0.0, "must be >= 0")
}

fn micros(flag: &'static str, value: f64) -> Result<f64> {
    positive(flag, value).map(|v| v / 1e6)
}

impl NoiseArgs {
    pub fn params(&self) -> Result<NoiseParams> {
        let cal = &self.calibration;
        let length_km = positive("--length-km", self.length_km)?;
        let group_index = check(
            "--group-index",
            self.group_index,
            self.group_index > 1.0,
            "must be > 1",
        )?;
        let drift = check("--drift", self.drift, true, "must be finite")?;
        let hurst = |default: f64| match self.hurst {
            Some(h) => check("--hurst", h, h > 0.0 && h < 1.0, "must lie in (0, 1)"),
            None => Ok(default),
        };
        let mut params = if cal.night || cal.day {
            let preset = if cal.night {
                Preset::Night
            } else {
                Preset::Day
            };
            NoiseParams {
                hurst: hurst(preset.params().hurst)?,
                ..preset.params()
            }
        } else if let Some(d) = cal.diffusion {
            let d = non_negative("--diffusion", d)?;
            let loop_km = positive("--calibration-km", self.calibration_km)?;
            NoiseParams::from_sagnac_calibration(d, loop_km, hurst(0.5)?, group_index)?
        } else {
            let sigma = non_negative("--sigma-ref", cal.sigma_ref.unwrap_or(0.0))?;
            NoiseParams::new(sigma, micros("--tau-ref-us", self.tau_ref_us)?, hurst(0.5)?)
        };
        params.drift_rate = drift;
        params.length_km = length_km;
        params.group_index = group_index;
        params.validate()?;
        Ok(params)
    }
}

fn simulate_noise(ctx: &mut Ctx, a: &SimulateNoise) -> Result<()> {
    let params = a.noise.params()?;
    let duration = micros("--duration-us", a.duration_us)?;
    let dt = micros("--dt-us", a.dt_us)?;
    let trace = PhaseProcess::new(params)?.sample_trace(duration, dt, ctx.seed)?;
    let out = output_path(&a.out);
    write_trace(&out, &TraceRecord::Phase(trace.clone()))?;
    let last = trace.samples.last().copied().unwrap_or(0.0);
    ctx.report.add_result(
        "noise",
        &json!({
            "params": params,
            "samples": trace.len(),
            "dt_s": dt,
            "final_phase_rad": last,
            "output": out.display().to_string(),
        }),
    )?;
    ctx.summaries.push(format!(
        "simulate noise: {} samples, final phase {last:.6} rad -> {}",
        trace.len(),
        out.display()
    ));
    Ok(())
}

fn simulate_fringe(ctx: &mut Ctx, a: &SimulateFringe) -> Result<()> {
    let params = a.noise.params()?;
    let process = PhaseProcess::new(params)?;
    let loop_km = positive("--loop-km", a.loop_km)?;
    let config = FringeScanConfig {
        n_points: a.points,
        pulses_per_point: a.pulses,
        detector_noise: non_negative("--detector-noise", a.detector_noise)?,
        i0: positive("--i0", a.i0)?,
        fringes: a.fringes,
    };
    let sigma = sagnac_effective_sigma(&process, loop_km)?;
    let scan = simulate_fringe_scan(&process, loop_km, &config, ctx.seed)?;
    let out = output_path(&a.out);
    write_fringe(&out, &scan)?;
    let expected = visibility_from_sigma(sigma)?;
    ctx.report.add_result(
        "fringe_scan",
        &json!({
            "params": params,
            "loop_km": loop_km,
            "effective_sigma_rad": sigma,
            "expected_visibility": expected,
            "points": scan.len(),
            "output": out.display().to_string(),
        }),
    )?;
    ctx.summaries.push(format!(
        "simulate fringe: {} points, effective sigma {sigma:.6} rad, expected visibility {expected:.6} -> {}",
        scan.len(),
        out.display()
    ));
    Ok(())
}

fn simulate_mz(ctx: &mut Ctx, a: &SimulateMz) -> Result<()> {
    let params = a.noise.params()?;
    let duration = micros("--duration-us", a.duration_us)?;
    let dt = micros("--dt-us", a.dt_us)?;
    let setup = MzSetup {
        i_max: check("--i-max", a.i_max, a.i_max > a.i_min, "must exceed --i-min")?,
        i_min: check("--i-min", a.i_min, true, "must be finite")?,
        phi0: check("--phi0", a.phi0, true, "must be finite")?,
    };
    let trace = simulate_mz_trace(&PhaseProcess::new(params)?, duration, dt, &setup, ctx.seed)?;
    let out = output_path(&a.out);
    write_trace(&out, &TraceRecord::Intensity(trace.clone()))?;
    ctx.report.add_result(
        "mz_trace",
        &json!({
            "params": params,
            "setup": setup,
            "samples": trace.len(),
            "dt_s": dt,
            "output": out.display().to_string(),
        }),
    )?;
    ctx.summaries.push(format!(
        "simulate mz: {} samples at {} us -> {}",
        trace.len(),
        a.dt_us,
        out.display()
    ));
    Ok(())
}

fn analyze_fringe(ctx: &mut Ctx, a: &AnalyzeFringe) -> Result<()> {
    ctx.input(&a.input)?;
    let fit = fit_fringe(&read_fringe(&a.input)?)?;
    ctx.report.add_result("fringe_fit", &fit)?;
    ctx.summaries.push(format!(
        "analyze fringe: visibility {:.6}, residual rms {:.3e}",
        fit.visibility, fit.residual_rms
    ));
    Ok(())
}

fn analyze_phase(ctx: &mut Ctx, a: &AnalyzePhase) -> Result<()> {
    ctx.input(&a.input)?;
    let band = SlopeBand {
        lo: a.band_lo,
        hi: a.band_hi,
    };
    if band.validate().is_err() {
        return Err(Error::domain(
            "--band-lo/--band-hi",
            format!("need 0 <= lo < hi <= 1, got [{}, {}]", a.band_lo, a.band_hi),
        ));
    }
    let phase = extract_phase(&read_intensity_trace(&a.input)?, band)?;
    let out = output_path(&a.out);
    write_trace(&out, &TraceRecord::Phase(phase.clone()))?;
    let coverage = phase.valid_len() as f64 / phase.len() as f64;
    ctx.report.add_result(
        "phase",
        &json!({
            "band": band,
            "samples": phase.len(),
            "segments": phase.segments.len(),
            "valid_samples": phase.valid_len(),
            "coverage": coverage,
            "output": out.display().to_string(),
        }),
    )?;
    ctx.summaries.push(format!(
        "analyze phase: {} segments covering {:.1}% of {} samples -> {}",
        phase.segments.len(),
        100.0 * coverage,
        phase.len(),
        out.display()
    ));
    Ok(())
}

/// Increment sets of several traces on the same grid, pooled per lag.
pub fn pooled_increments(
    traces: &[crate::noise_process::PhaseTrace],
    lags: &[usize],
) -> Result<IncrementSets> {
    let mut pooled: Option<IncrementSets> = None;
    for t in traces {
        let sets = increment_sets_by_lag(t, lags)?;
        match &mut pooled {
            None => pooled = Some(sets),
            Some(p) => {
                if p.dt != sets.dt {
                    return Err(Error::domain(
                        "dt",
                        format!(
                            "traces disagree on the sample interval ({} vs {})",
                            p.dt, sets.dt
                        ),
                    ));
                }
                for (acc, more) in p.sets.iter_mut().zip(sets.sets) {
                    acc.extend(more);
                }
            }
        }
    }
    pooled.ok_or_else(|| Error::domain("input", "at least one trace is required"))
}

fn analyze_dphi(ctx: &mut Ctx, a: &AnalyzeDphi) -> Result<()> {
    let tau_max = micros("--tau-max-us", a.tau_max_us)?;
    let hist_tau = a
        .histogram_tau_us
        .map(|t| micros("--histogram-tau-us", t))
        .transpose()?;
    let mut traces = Vec::with_capacity(a.input.len());
    for path in &a.input {
        ctx.input(path)?;
        traces.push(read_phase_trace(path)?);
    }
    let dt = traces[0].dt;
    let mut lags = lag_grid_up_to(tau_max, dt).map_err(|_| {
        Error::domain(
            "--tau-max-us",
            format!("must be at least one sample ({} us)", dt * 1e6),
        )
    })?;
    if let Some(t) = hist_tau {
        lags.push(lag_for(t, dt).map_err(|e| Error::domain("--histogram-tau-us", e.to_string()))?);
    }
    let sets = pooled_increments(&traces, &lags)?;
    let mut stats = mean_phase_change(&sets)?;

    let mut summary = format!(
        "analyze dphi: {} lags from {} trace(s), max mean change {:.6} rad",
        stats.taus.len(),
        traces.len(),
        stats.mean_abs_change.iter().copied().fold(0.0, f64::max)
    );
    if let Some(tau) = hist_tau {
        let fit = fit_gaussian(&sets, tau, a.bins)?;
        let deviation = check_gaussian_relation(&stats, fit.tau).ok();
        summary.push_str(&format!(
            "; at {:.1} us sigma {:.6} rad from {} increments",
            fit.tau * 1e6,
            fit.sigma,
            fit.n
        ));
        if let Some(path) = &a.histogram_out {
            write_histogram(output_path(path), &fit.histogram, fit.tau)?;
        }
        ctx.report
            .add_result("gaussian_relation_deviation", &deviation)?;
        stats.histogram = Some(fit);
    }
    if let Some(path) = &a.out {
        let out = output_path(path);
        write_dphi(&out, &stats)?;
        summary.push_str(&format!(" -> {}", out.display()));
    }
    ctx.report.add_result("phase_stats", &stats)?;
    ctx.summaries.push(summary);
    Ok(())
}

fn analyze_tau_threshold(ctx: &mut Ctx, a: &AnalyzeTauThreshold) -> Result<()> {
    let target = positive("--dphi", a.dphi)?;
    ctx.input(&a.input)?;
    let stats = read_dphi(&a.input)?;
    let tau = tau_threshold(&stats, target)?;
    ctx.report.add_result(
        "tau_threshold",
        &json!({ "target_rad": target, "tau_s": tau }),
    )?;
    ctx.summaries.push(format!(
        "analyze tau-threshold: mean phase change reaches {target} rad at {:.2} us",
        tau * 1e6
    ));
    Ok(())
}

fn analyze_exponent(ctx: &mut Ctx, a: &AnalyzeExponent) -> Result<()> {
    let lo = micros("--tau-min-us", a.tau_min_us)?;
    let hi = micros("--tau-max-us", a.tau_max_us)?;
    if hi <= lo {
        return Err(Error::domain("--tau-max-us", "must exceed --tau-min-us"));
    }
    ctx.input(&a.input)?;
    let fit = fit_scaling_exponent(&read_dphi(&a.input)?, lo, hi)?;
    ctx.report.add_result("scaling_exponent", &fit)?;
    ctx.summaries.push(format!(
        "analyze exponent: x = {:.4} over {} lags",
        fit.exponent, fit.n_lags
    ));
    Ok(())
}

fn analyze_diffusion(ctx: &mut Ctx, a: &AnalyzeDiffusion) -> Result<()> {
    let width = match (a.width.visibility, a.width.sigma) {
        (Some(v), _) => PhaseWidth::Visibility(check(
            "--visibility",
            v,
            v > 0.0 && v <= 1.0,
            "must lie in (0, 1]",
        )?),
        (None, Some(s)) => PhaseWidth::Sigma(non_negative("--sigma", s)?),
        (None, None) => return Err(Error::domain("--visibility/--sigma", "one is required")),
    };
    let length = positive("--length-km", a.length_km)?;
    let d = estimate_diffusion(width, length)?;
    ctx.report.add_result(
        "diffusion",
        &json!({ "input": width, "length_km": length, "sigma_rad": width.sigma()?, "diffusion_rad2_per_km": d }),
    )?;
    ctx.summaries.push(format!(
        "analyze diffusion: D = {d:.6e} rad^2/km over {length} km"
    ));
    Ok(())
}

fn repeater_budget(ctx: &mut Ctx, a: &RepeaterBudget) -> Result<()> {
    let total = positive("--total-km", a.total_km)?;
    let segment = positive("--segment-km", a.segment_km)?;
    let fidelity = check(
        "--fidelity",
        a.fidelity,
        a.fidelity > 0.5 && a.fidelity < 1.0,
        "must lie in (0.5, 1)",
    )?;
    if a.links < 1 {
        return Err(Error::domain("--links", "must be >= 1"));
    }
    let report = budget_per_segment(total, a.links, fidelity, segment)?;
    let mut block = serde_json::to_value(report)
        .map_err(|e| Error::Undefined(format!("budget is not serializable: {e}")))?;
    block["sigma_limit_rad"] = json!(report.per_segment_sigma_limit);
    block["dphi_limit_rad"] = json!(report.per_segment_dphi_limit);
    ctx.report.add_result("budget", &block)?;
    ctx.summaries.push(format!(
        "repeater budget: {segment} km segment may carry sigma {:.4} rad, mean phase change {:.4} rad",
        report.per_segment_sigma_limit, report.per_segment_dphi_limit
    ));
    Ok(())
}

fn repeater_fidelity(ctx: &mut Ctx, a: &RepeaterFidelity) -> Result<()> {
    let sigma = non_negative("--sigma", a.sigma)?;
    let closed = fidelity_from_sigma(sigma)?;
    let mc = if a.samples > 0 {
        Some(monte_carlo_fidelity(sigma, a.samples, ctx.seed)?)
    } else {
        None
    };
    ctx.report.add_result(
        "fidelity",
        &json!({ "sigma_rad": sigma, "fidelity": closed, "monte_carlo": mc }),
    )?;
    let mut line = format!("repeater fidelity: F = {closed:.6}");
    if let Some(m) = mc {
        line.push_str(&format!(
            ", Monte Carlo {:.6} +/- {:.1e} ({} samples)",
            m.fidelity, m.std_error, m.n_samples
        ));
    }
    ctx.summaries.push(line);
    Ok(())
}
