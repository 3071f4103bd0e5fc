//! Phase and shift ambiguity detection by decoder model evidence.
//!
//! Blind EM cannot tell a channel estimate from its rotations by `2π/M` or
//! from circular shifts of its taps: all of them generate the same set of
//! noiseless outputs. The decoder can. Each candidate (shift `τ`, phase
//! `i`) is equalized, demapped and decoded, and scored by the decoder's
//! log evidence `ln Σ_{c_k} p(c_k, y)`. The best candidate replaces the
//! estimate when it beats every other candidate by the margin.
//!
//! Conventions, both pinned by the injection tests:
//! - phase hypothesis `i` reads row entry `m` from `(m − i) mod M`; it is the
//!   correct one when the estimate equals the truth rotated by `e^{j2πi/M}`;
//! - shift hypothesis `τ` is [`ChannelTaps::circular_shift`] by `τ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::ChannelTaps;
use crate::em::{e_step, GaussianModel};
use crate::error::{Error, Result};
use crate::fb::marginalize_symbols;
use crate::message::{LogMessage, SymbolMessage};
use crate::trellis::IsiTrellis;
use crate::turbo::{equalizer_extrinsic, ReceiverChain};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DetectorMode {
    /// Conventional receiver.
    #[default]
    Off,
    /// `M` phase hypotheses on the unshifted estimate.
    Phase,
    /// `L·M` joint phase and shift hypotheses.
    Joint,
}

impl std::str::FromStr for DetectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "phase" => Ok(Self::Phase),
            "joint" => Ok(Self::Joint),
            other => Err(Error::InvalidConfig(format!(
                "unknown detector mode {other:?} (off | phase | joint)"
            ))),
        }
    }
}

impl std::fmt::Display for DetectorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Off => "off",
            Self::Phase => "phase",
            Self::Joint => "joint",
        })
    }
}

/// Minimum log-evidence lead (natural log) of the winner over the runner-up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginRule {
    pub threshold: f64,
}

impl MarginRule {
    pub fn new(threshold: f64) -> Result<Self> {
        if threshold >= 0.0 {
            Ok(Self { threshold })
        } else {
            Err(Error::InvalidConfig(format!("margin {threshold} must be non-negative")))
        }
    }
}

impl Default for MarginRule {
    fn default() -> Self {
        Self { threshold: 1e3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisScore {
    pub phase_index: usize,
    pub shift_index: usize,
    pub log_evidence: f64,
}

/// The `M` circular re-indexings of a symbol message.
pub fn phase_hypotheses(extrinsic: &SymbolMessage) -> Vec<SymbolMessage> {
    (0..extrinsic.width())
        .map(|i| rotate_symbols(extrinsic, i))
        .collect()
}

/// Hypothesis `i`: `out[t][m] = in[t][(m − i) mod M]`.
pub fn rotate_symbols(msg: &SymbolMessage, i: usize) -> SymbolMessage {
    let m = msg.width();
    let shift = i % m;
    let mut data = Vec::with_capacity(msg.len() * m);
    for row in msg.rows() {
        data.extend((0..m).map(|k| row[(k + m - shift) % m]));
    }
    LogMessage::from_log(m, data, msg.is_normalized()).expect("permutation of a valid table")
}

/// The `L` circular shifts of a tap vector, `τ = 0` first.
pub fn shift_hypotheses(taps: &ChannelTaps) -> Vec<ChannelTaps> {
    (0..taps.len()).map(|tau| taps.circular_shift(tau)).collect()
}

#[derive(Clone, Debug)]
pub struct ScoredHypotheses {
    /// Shift-major: `scores[τ·M + i]`.
    pub scores: Vec<HypothesisScore>,
    pub equalizer_passes: u64,
    pub decoder_passes: u64,
    pub decoder_branch_updates: u64,
}

/// Scores every hypothesis allowed by `mode` by decoder log evidence.
///
/// Each shift candidate is equalized once with uniform symbol priors; its
/// extrinsic output is re-indexed for each phase candidate and decoded with
/// uniform bit priors. The score is the decoder evidence of the unnormalized
/// joint `p(x_t, y | ĥ↻τ)`, computed as the evidence of the normalized
/// posteriors plus `N_c · ln p(y | ĥ↻τ)`.
pub fn score_hypotheses(
    y: &[Complex64],
    taps: &ChannelTaps,
    sigma2: f64,
    chain: ReceiverChain<'_>,
    mode: DetectorMode,
) -> Result<ScoredHypotheses> {
    let isi = chain.isi;
    let m = isi.constellation().order();
    let shifts = match mode {
        DetectorMode::Off => {
            return Err(Error::InvalidConfig("scoring requested with detection off".into()))
        }
        DetectorMode::Phase => vec![taps.clone()],
        DetectorMode::Joint => shift_hypotheses(taps),
    };
    let uniform_symbols = LogMessage::uniform(y.len(), m);
    let uniform_bits = LogMessage::uniform(chain.codeword_len(), 2);
    let mut out = ScoredHypotheses {
        scores: Vec::with_capacity(shifts.len() * m),
        equalizer_passes: 0,
        decoder_passes: 0,
        decoder_branch_updates: 0,
    };
    for (shift_index, candidate) in shifts.into_iter().enumerate() {
        let model = GaussianModel::from_taps(isi, candidate, sigma2)?;
        let fb = e_step(y, &model, &uniform_symbols, isi)?;
        out.equalizer_passes += 1;
        let extrinsic = equalizer_extrinsic(&marginalize_symbols(&fb, isi), &uniform_symbols)?;
        // Every demapped bit row carries the mass p(y | ĥ↻τ) dropped by normalization.
        let equalizer_offset = chain.codeword_len() as f64 * fb.log_evidence();
        for (phase_index, rotated) in phase_hypotheses(&extrinsic).into_iter().enumerate() {
            let decoded = chain.decode_symbol_extrinsic(&rotated, &uniform_bits)?;
            out.decoder_passes += 1;
            out.decoder_branch_updates += decoded.branch_updates;
            out.scores.push(HypothesisScore {
                phase_index,
                shift_index,
                log_evidence: decoded.log_evidence + equalizer_offset,
            });
        }
    }
    Ok(out)
}

/// Outcome of a detection event.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub model: GaussianModel,
    pub phase_index: usize,
    pub shift_index: usize,
    /// Winner's lead over the runner-up (`+inf` with a single hypothesis).
    pub margin: f64,
    pub applied: bool,
}

impl Refinement {
    /// `φ̂ = 2π·î/M`.
    pub fn phase(&self, order: usize) -> f64 {
        2.0 * PI * self.phase_index as f64 / order as f64
    }
}

/// Picks the highest-evidence hypothesis and, when its lead clears the
/// margin, returns the refined model with taps `e^{−jφ̂}·(ĥ ↻ τ̂)`.
/// Ties go to the earliest hypothesis in shift-major order.
pub fn select_and_refine(
    scores: &[HypothesisScore],
    model: &GaussianModel,
    rule: &MarginRule,
    tr: &IsiTrellis,
) -> Result<Refinement> {
    let (best_pos, best) = scores
        .iter()
        .enumerate()
        .fold(None::<(usize, &HypothesisScore)>, |acc, (k, s)| match acc {
            Some((_, b)) if b.log_evidence >= s.log_evidence => acc,
            _ => Some((k, s)),
        })
        .ok_or_else(|| Error::InvalidConfig("no hypotheses to select from".into()))?;
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != best_pos)
        .map(|(_, s)| s.log_evidence)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = best.log_evidence - runner_up;
    let applied = margin >= rule.threshold;
    let model = if applied {
        let order = tr.constellation().order();
        let phase = 2.0 * PI * best.phase_index as f64 / order as f64;
        let taps = model
            .taps
            .circular_shift(best.shift_index)
            .scaled(Complex64::from_polar(1.0, -phase));
        let mut refined = GaussianModel::from_taps(tr, taps, model.sigma2())?;
        refined.iteration = model.iteration;
        refined
    } else {
        model.clone()
    };
    Ok(Refinement {
        model,
        phase_index: best.phase_index,
        shift_index: best.shift_index,
        margin,
        applied,
    })
}
