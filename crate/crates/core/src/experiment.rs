//! Monte Carlo driver: seeded trials, MSE / failure-rate aggregation and the
//! CSV and key-value result files.
//!
//! Trial `k` draws every random quantity from its own `(base_seed, k, role)`
//! stream (see [`crate::rng`]), and results are collected in trial order, so
//! output is identical for any thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::ambiguity::{DetectorMode, MarginRule};
use crate::channel::{apply_channel, perturb_init, sigma_from_snr, ChannelProfile, ChannelTaps};
use crate::coding::{CodeSpec, Interleaver};
use crate::constellation::Constellation;
use crate::em::GaussianModel;
use crate::error::{Error, Result};
use crate::rng::{trial_rng, trial_seed, Role};
use crate::trellis::{CodeTrellis, IsiTrellis};
use crate::turbo::{run_turbo, ReceiverChain, TurboConfig, TurboOutcome};

/// Final MSE above this marks a trial as failed.
pub const FAILURE_MSE: f64 = 0.1;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "CEM_THREADS";

/// What the MSE is averaged over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MseNormalization {
    /// `(1/E)·Σ_l |μ̂_l − μ_l|²` over all Gaussian means.
    #[default]
    PerMean,
    /// `(1/L)·Σ_l |ĥ_l − h_l|²` over the channel taps.
    PerTap,
}

impl std::str::FromStr for MseNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::PerMean),
            "tap" => Ok(Self::PerTap),
            other => Err(Error::InvalidConfig(format!("unknown MSE normalization {other:?}"))),
        }
    }
}

impl std::fmt::Display for MseNormalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerMean => "mean",
            Self::PerTap => "tap",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub profile: ChannelProfile,
    pub snr_db: f64,
    pub sigma_h2: f64,
    pub info_bits: usize,
    pub n_trials: usize,
    pub n_turbo: usize,
    pub n_em_per_turbo: usize,
    pub detector: DetectorMode,
    pub margin_threshold: f64,
    pub base_seed: u64,
    pub mse_normalization: MseNormalization,
    /// Worker threads; `None` defers to [`THREADS_ENV`], then to rayon.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ChannelProfile::L3,
            snr_db: 6.0,
            sigma_h2: 0.5,
            info_bits: 2000,
            n_trials: 200,
            n_turbo: 7,
            n_em_per_turbo: 5,
            detector: DetectorMode::Off,
            margin_threshold: 1e3,
            base_seed: 1,
            mse_normalization: MseNormalization::PerMean,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("info_bits", self.info_bits),
            ("n_trials", self.n_trials),
            ("n_turbo", self.n_turbo),
            ("n_em_per_turbo", self.n_em_per_turbo),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig("snr_db must be finite".into()));
        }
        if !(self.sigma_h2 >= 0.0) {
            return Err(Error::InvalidConfig("sigma_h2 must be non-negative".into()));
        }
        MarginRule::new(self.margin_threshold)?;
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn turbo_config(&self) -> TurboConfig {
        TurboConfig {
            n_turbo: self.n_turbo,
            n_em_per_turbo: self.n_em_per_turbo,
            detector: self.detector,
            margin: MarginRule {
                threshold: self.margin_threshold,
            },
        }
    }

    pub fn iterations(&self) -> usize {
        self.n_turbo * self.n_em_per_turbo
    }
}

/// Receiver structures shared by every trial of a run.
#[derive(Clone, Debug)]
pub struct SystemSetup {
    pub constellation: Constellation,
    pub code: CodeSpec,
    pub isi: IsiTrellis,
    pub code_trellis: CodeTrellis,
}

impl SystemSetup {
    /// QPSK with the rate-1/2 `(5,7)_8` code.
    pub fn new(profile: ChannelProfile) -> Result<Self> {
        let constellation = Constellation::qpsk();
        let code = CodeSpec::rate_half_5_7();
        Ok(Self {
            isi: IsiTrellis::new(&constellation, profile.len())?,
            code_trellis: CodeTrellis::new(&code),
            constellation,
            code,
        })
    }
}

/// One transmitted and received frame with its ground truth.
#[derive(Clone, Debug)]
pub struct Frame {
    pub info_bits: Vec<u8>,
    pub codeword: Vec<u8>,
    pub interleaver: Interleaver,
    pub symbol_indices: Vec<usize>,
    /// Oldest first, `L − 1` symbol indices sent before the frame.
    pub preamble: Vec<usize>,
    pub taps: ChannelTaps,
    pub sigma2: f64,
    pub y: Vec<Complex64>,
    pub init_taps: ChannelTaps,
}

impl Frame {
    /// Ground-truth means `D·h`.
    pub fn truth_means(&self, setup: &SystemSetup) -> Result<Vec<Complex64>> {
        setup.isi.means_from_taps(&self.taps)
    }
}

/// Draws trial `trial` of the run described by `config`.
pub fn simulate_frame(config: &RunConfig, setup: &SystemSetup, trial: u64) -> Result<Frame> {
    let seed = config.base_seed;
    let c = &setup.constellation;
    let mut bits_rng = trial_rng(seed, trial, Role::DataBits);
    let info_bits: Vec<u8> = (0..config.info_bits)
        .map(|_| bits_rng.random_range(0..2u8))
        .collect();
    let codeword = setup.code.encode(&info_bits)?;
    if codeword.len() % c.bits_per_symbol() != 0 {
        return Err(Error::InvalidConfig(format!(
            "codeword of {} bits does not fill whole symbols",
            codeword.len()
        )));
    }
    let interleaver = Interleaver::random(codeword.len(), trial_seed(seed, trial, Role::Interleaver));
    let symbol_indices = c.map_indices(&interleaver.interleave(&codeword)?)?;
    let taps = config
        .profile
        .draw(&mut trial_rng(seed, trial, Role::ChannelPhases));
    let mut pre_rng = trial_rng(seed, trial, Role::Preamble);
    let preamble: Vec<usize> = (0..taps.len() - 1)
        .map(|_| pre_rng.random_range(0..c.order()))
        .collect();
    let sigma2 = sigma_from_snr(&taps, config.snr_db, c.energy());
    let x: Vec<Complex64> = symbol_indices.iter().map(|&i| c.point(i)).collect();
    let pre: Vec<Complex64> = preamble.iter().map(|&i| c.point(i)).collect();
    let y = apply_channel(&x, &taps, &pre, sigma2, &mut trial_rng(seed, trial, Role::Noise))?;
    let init_taps = perturb_init(
        &taps,
        config.sigma_h2,
        &mut trial_rng(seed, trial, Role::InitPerturbation),
    )?;
    Ok(Frame {
        info_bits,
        codeword,
        interleaver,
        symbol_indices,
        preamble,
        taps,
        sigma2,
        y,
        init_taps,
    })
}

/// Runs the receiver configured by `config` on `frame`.
pub fn receive(config: &RunConfig, setup: &SystemSetup, frame: &Frame) -> Result<TurboOutcome> {
    let init = GaussianModel::from_taps(&setup.isi, frame.init_taps.clone(), frame.sigma2)?;
    let chain = ReceiverChain {
        isi: &setup.isi,
        code: &setup.code_trellis,
        interleaver: &frame.interleaver,
    };
    run_turbo(&frame.y, init, chain, &config.turbo_config())
}

/// Mean square error between estimated and true means.
pub fn compute_mse(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    crate::error::check_len("MSE operands", truth.len(), estimate.len())?;
    if truth.is_empty() {
        return Err(Error::InvalidConfig("MSE of empty vectors".into()));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / truth.len() as f64)
}

fn mse_for(
    norm: MseNormalization,
    setup: &SystemSetup,
    means: &[Complex64],
    truth_means: &[Complex64],
    truth_taps: &ChannelTaps,
) -> Result<f64> {
    match norm {
        MseNormalization::PerMean => compute_mse(means, truth_means),
        MseNormalization::PerTap => {
            let taps = setup.isi.taps_from_means(means)?;
            compute_mse(taps.as_slice(), truth_taps.as_slice())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub mse_per_em_iteration: Vec<f64>,
    pub final_mse: f64,
    pub failed: bool,
    pub detected_phase_index: Option<usize>,
    pub detected_shift_index: Option<usize>,
    pub detection_margin: Option<f64>,
    pub refinement_applied: bool,
    pub info_bit_error_count: usize,
}

/// Simulates and receives one trial.
pub fn run_trial(config: &RunConfig, setup: &SystemSetup, trial: u64) -> Result<TrialRecord> {
    let frame = simulate_frame(config, setup, trial)?;
    let outcome = receive(config, setup, &frame)?;
    record_trial(config, setup, &frame, &outcome, trial)
}

pub fn record_trial(
    config: &RunConfig,
    setup: &SystemSetup,
    frame: &Frame,
    outcome: &TurboOutcome,
    trial: u64,
) -> Result<TrialRecord> {
    let truth = frame.truth_means(setup)?;
    let mse = outcome
        .means_trajectory
        .iter()
        .map(|m| mse_for(config.mse_normalization, setup, m, &truth, &frame.taps))
        .collect::<Result<Vec<f64>>>()?;
    let final_mse = *mse.last().expect("at least one EM iteration");
    let info_bit_error_count = outcome
        .info_decisions
        .iter()
        .zip(&frame.info_bits)
        .filter(|(a, b)| a != b)
        .count();
    let det = outcome.detection.as_ref();
    Ok(TrialRecord {
        trial_id: trial,
        mse_per_em_iteration: mse,
        final_mse,
        failed: final_mse > FAILURE_MSE,
        detected_phase_index: det.map(|d| d.phase_index),
        detected_shift_index: det.map(|d| d.shift_index),
        detection_margin: det.map(|d| d.margin),
        refinement_applied: det.is_some_and(|d| d.applied),
        info_bit_error_count,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub config: RunConfig,
    pub n_trials: usize,
    pub mse_mean: Vec<f64>,
    pub mse_median: Vec<f64>,
    pub mse_p25: Vec<f64>,
    pub mse_p75: Vec<f64>,
    pub failure_rate: f64,
    pub refinement_rate: f64,
    pub bit_error_rate: f64,
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn summarize(config: &RunConfig, records: &[TrialRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("no trial records to summarize".into()));
    }
    let iters = records[0].mse_per_em_iteration.len();
    let mut mse_mean = Vec::with_capacity(iters);
    let mut mse_median = Vec::with_capacity(iters);
    let mut mse_p25 = Vec::with_capacity(iters);
    let mut mse_p75 = Vec::with_capacity(iters);
    for it in 0..iters {
        let mut col: Vec<f64> = records
            .iter()
            .map(|r| r.mse_per_em_iteration.get(it).copied())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidConfig("ragged MSE trajectories".into()))?;
        mse_mean.push(col.iter().sum::<f64>() / col.len() as f64);
        col.sort_by(f64::total_cmp);
        mse_p25.push(percentile(&col, 0.25));
        mse_median.push(percentile(&col, 0.5));
        mse_p75.push(percentile(&col, 0.75));
    }
    let n = records.len();
    let failed = records.iter().filter(|r| r.failed).count();
    let refined = records.iter().filter(|r| r.refinement_applied).count();
    let bit_errors: usize = records.iter().map(|r| r.info_bit_error_count).sum();
    Ok(Summary {
        config: config.clone(),
        n_trials: n,
        mse_mean,
        mse_median,
        mse_p25,
        mse_p75,
        failure_rate: failed as f64 / n as f64,
        refinement_rate: refined as f64 / n as f64,
        bit_error_rate: bit_errors as f64 / (n * config.info_bits) as f64,
    })
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = threads.or(env).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs trials `0..n_trials` in parallel and aggregates them in trial order.
pub fn run_experiment(config: &RunConfig) -> Result<Experiment> {
    config.validate()?;
    let setup = SystemSetup::new(config.profile)?;
    let pool = thread_pool(config.threads)?;
    let records = pool.install(|| {
        (0..config.n_trials as u64)
            .into_par_iter()
            .map(|k| run_trial(config, &setup, k))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(config, &records)?;
    Ok(Experiment { records, summary })
}

/// One point of a failure-rate sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub sigma_h2: f64,
    pub detector: DetectorMode,
    pub failure_rate: f64,
    pub refinement_rate: f64,
    pub n_trials: usize,
}

/// Failure rate over a grid of initialization errors and detector modes.
pub fn run_sweep(
    base: &RunConfig,
    sigma_h2_grid: &[f64],
    detectors: &[DetectorMode],
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(sigma_h2_grid.len() * detectors.len());
    for &sigma_h2 in sigma_h2_grid {
        for &detector in detectors {
            let cfg = RunConfig {
                sigma_h2,
                detector,
                ..base.clone()
            };
            let s = run_experiment(&cfg)?.summary;
            out.push(SweepPoint {
                sigma_h2,
                detector,
                failure_rate: s.failure_rate,
                refinement_rate: s.refinement_rate,
                n_trials: s.n_trials,
            });
        }
    }
    Ok(out)
}

/// Twelve significant digits, scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "trial_id,em_iter,mse,failed,phase_idx,shift_idx,refined";

/// Serializes string rows under a comma-separated header, `\n` terminated.
fn csv_table<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, row: &[String]| {
        w.write_record(row).expect("writing to memory cannot fail")
    };
    write(&mut w, &header.split(',').map(String::from).collect::<Vec<_>>());
    for row in rows {
        write(&mut w, &row);
    }
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("fields are ASCII")
}

/// Per-trial table, one row per EM iteration (`em_iter` is 1-based).
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let rows = records.iter().flat_map(|r| {
        r.mse_per_em_iteration.iter().enumerate().map(move |(k, mse)| {
            vec![
                r.trial_id.to_string(),
                (k + 1).to_string(),
                fmt_num(*mse),
                u8::from(r.failed).to_string(),
                fmt_opt(r.detected_phase_index),
                fmt_opt(r.detected_shift_index),
                u8::from(r.refinement_applied).to_string(),
            ]
        })
    });
    csv_table(CSV_HEADER, rows)
}

/// The per-trial fields carried by the CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialTrace {
    pub trial_id: u64,
    pub mse: Vec<f64>,
    pub failed: bool,
    pub phase_idx: Option<usize>,
    pub shift_idx: Option<usize>,
    pub refined: bool,
}

impl TrialRecord {
    pub fn trace(&self) -> TrialTrace {
        TrialTrace {
            trial_id: self.trial_id,
            mse: self.mse_per_em_iteration.clone(),
            failed: self.failed,
            phase_idx: self.detected_phase_index,
            shift_idx: self.detected_shift_index,
            refined: self.refinement_applied,
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {name} field {s:?}"),
    })
}

fn parse_flag(s: &str, line: usize, name: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse {
            line,
            msg: format!("bad {name} flag {s:?}"),
        }),
    }
}

/// Parses a table written by [`records_to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<TrialTrace>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header_ok = matches!(
        records.next(),
        Some(Ok(h)) if h.iter().eq(CSV_HEADER.split(','))
    );
    if !header_ok {
        return Err(Error::Parse {
            line: 1,
            msg: "missing or unexpected header".into(),
        });
    }
    let mut out: Vec<TrialTrace> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let n = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 7 {
            return Err(Error::Parse {
                line: n,
                msg: format!("expected 7 fields, found {}", rec.len()),
            });
        }
        let trial_id: u64 = parse_field(&rec[0], n, "trial_id")?;
        let em_iter: usize = parse_field(&rec[1], n, "em_iter")?;
        let mse: f64 = parse_field(&rec[2], n, "mse")?;
        let opt = |s: &str, name| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_field(s, n, name).map(Some)
            }
        };
        let row = TrialTrace {
            trial_id,
            mse: vec![mse],
            failed: parse_flag(&rec[3], n, "failed")?,
            phase_idx: opt(&rec[4], "phase_idx")?,
            shift_idx: opt(&rec[5], "shift_idx")?,
            refined: parse_flag(&rec[6], n, "refined")?,
        };
        match out.last_mut() {
            Some(last) if last.trial_id == trial_id => {
                if em_iter != last.mse.len() + 1 {
                    return Err(Error::Parse {
                        line: n,
                        msg: format!("em_iter {em_iter} out of sequence"),
                    });
                }
                last.mse.push(mse);
            }
            _ => {
                if em_iter != 1 {
                    return Err(Error::Parse {
                        line: n,
                        msg: "trial does not start at em_iter 1".into(),
                    });
                }
                out.push(row);
            }
        }
    }
    Ok(out)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",")
}

/// `key = value` summary with the configuration echoed.
pub fn summary_to_text(s: &Summary) -> String {
    let c = &s.config;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("profile", c.profile.to_string());
    kv("snr_db", fmt_num(c.snr_db));
    kv("sigma_h2", fmt_num(c.sigma_h2));
    kv("info_bits", c.info_bits.to_string());
    kv("n_trials", c.n_trials.to_string());
    kv("n_turbo", c.n_turbo.to_string());
    kv("n_em_per_turbo", c.n_em_per_turbo.to_string());
    kv("detector", c.detector.to_string());
    kv("margin_threshold", fmt_num(c.margin_threshold));
    kv("base_seed", c.base_seed.to_string());
    kv("mse_normalization", c.mse_normalization.to_string());
    kv("failure_rate", fmt_num(s.failure_rate));
    kv("refinement_rate", fmt_num(s.refinement_rate));
    kv("bit_error_rate", fmt_num(s.bit_error_rate));
    kv("mse_mean", join(&s.mse_mean));
    kv("mse_median", join(&s.mse_median));
    kv("mse_p25", join(&s.mse_p25));
    kv("mse_p75", join(&s.mse_p75));
    out
}

pub const SWEEP_HEADER: &str = "profile,sigma_h2,detector,failure_rate,refinement_rate,n_trials";

pub fn sweep_to_csv(profile: ChannelProfile, points: &[SweepPoint]) -> String {
    let rows = points.iter().map(|p| {
        vec![
            profile.to_string(),
            fmt_num(p.sigma_h2),
            p.detector.to_string(),
            fmt_num(p.failure_rate),
            fmt_num(p.refinement_rate),
            p.n_trials.to_string(),
        ]
    });
    csv_table(SWEEP_HEADER, rows)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, Default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Writes the per-trial CSV and the key-value summary where requested.
pub fn emit_results(records: &[TrialRecord], summary: &Summary, paths: &OutputPaths) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("no trial records to emit".into()));
    }
    if let Some(p) = &paths.csv {
        write_file(p, &records_to_csv(records))?;
    }
    if let Some(p) = &paths.summary {
        write_file(p, &summary_to_text(summary))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, mse: Vec<f64>) -> TrialRecord {
        let final_mse = *mse.last().unwrap();
        TrialRecord {
            trial_id: id,
            mse_per_em_iteration: mse,
            final_mse,
            failed: final_mse > FAILURE_MSE,
            detected_phase_index: Some(1),
            detected_shift_index: None,
            detection_margin: None,
            refinement_applied: false,
            info_bit_error_count: 0,
        }
    }

    #[test]
    fn mse_basics() {
        let mu = vec![Complex64::new(0.3, -0.2); 4];
        assert_eq!(compute_mse(&mu, &mu).unwrap(), 0.0);
        let off: Vec<Complex64> = mu.iter().map(|m| m + 0.1).collect();
        assert!((compute_mse(&off, &mu).unwrap() - 0.01).abs() < 1e-15);
        assert!(compute_mse(&mu[..2], &mu).is_err());
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.25), 1.75);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn failure_rate_is_exact() {
        let cfg = RunConfig {
            n_trials: 4,
            ..RunConfig::default()
        };
        let records = vec![
            record(0, vec![0.5]),
            record(1, vec![1e-3]),
            record(2, vec![2e-4]),
            record(3, vec![0.1]),
        ];
        let s = summarize(&cfg, &records).unwrap();
        assert_eq!(s.failure_rate, 0.25);
        assert!(s.mse_p25[0] <= s.mse_median[0] && s.mse_median[0] <= s.mse_p75[0]);
    }

    #[test]
    fn csv_layout() {
        let csv = records_to_csv(&[record(3, vec![0.5, 0.25, 0.125, 1e-3, 2.5e-4])]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "3,1,5.00000000000e-1,0,1,,0");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn csv_parse_rejects_garbage() {
        assert!(parse_csv("nope\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n0,2,1e-3,0,,,0\n")).is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n0,1,x,0,,,0\n")).is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n0,1,1e-3,2,,,0\n")).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            n_trials: 0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            margin_threshold: -1.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
