//! Code-aided joint estimation and turbo equalization.
//!
//! Each turbo iteration runs the EM estimator-equalizer under the current
//! symbol priors, converts its extrinsic output to coded-bit likelihoods
//! (demap, deinterleave), decodes, and feeds the decoder's extrinsic output
//! back as symbol priors (interleave, map).

use num_complex::Complex64;

use crate::ambiguity::{score_hypotheses, select_and_refine, DetectorMode, MarginRule, Refinement};
use crate::coding::Interleaver;
use crate::em::{e_step, run_em, GaussianModel, Projection};
use crate::error::{check_len, Error, Result};
use crate::fb::{code_branch_metrics, marginalize_bits, marginalize_symbols, run_forward_backward, Boundary};
use crate::message::{BitMessage, LogMessage, SymbolMessage};
use crate::trellis::{CodeTrellis, IsiTrellis};

/// Priors are raised to this log value before being divided out.
pub const PRIOR_FLOOR_LN: f64 = -27.631_021_115_928_547; // ln(1e-12)

/// The fixed receiver structure for one frame: equalizer trellis, code
/// trellis and the frame's interleaver.
#[derive(Clone, Copy, Debug)]
pub struct ReceiverChain<'a> {
    pub isi: &'a IsiTrellis,
    pub code: &'a CodeTrellis,
    pub interleaver: &'a Interleaver,
}

impl ReceiverChain<'_> {
    pub fn codeword_len(&self) -> usize {
        self.interleaver.len()
    }

    pub fn info_len(&self) -> usize {
        let spec = self.code.spec();
        self.codeword_len() / spec.rate_inv() - spec.termination_bits()
    }

    /// Symbol extrinsics → demap → deinterleave → decode.
    pub fn decode_symbol_extrinsic(
        &self,
        extrinsic: &SymbolMessage,
        interleaved_bit_priors: &BitMessage,
    ) -> Result<DecoderOutput> {
        let demapped = self
            .isi
            .constellation()
            .demap_soft(extrinsic, interleaved_bit_priors)?;
        let llh = self.interleaver.deinterleave_msg(&demapped.message)?;
        let mut out = decoder_pass(&llh, self.code)?;
        out.degenerate_rows = demapped.degenerate_rows;
        Ok(out)
    }
}

/// `p^E(y | x_t) = p(x_t, y) / p^E(x_t)` in the log domain, prior floored.
pub fn equalizer_extrinsic(posterior: &SymbolMessage, prior: &SymbolMessage) -> Result<SymbolMessage> {
    posterior.divide(prior, PRIOR_FLOOR_LN)
}

#[derive(Clone, Debug)]
pub struct DecoderOutput {
    /// `log p(c_k, y)`.
    pub joint: BitMessage,
    /// `log p^E(c_k) = log p(c_k, y) − log p^E(y | c_k)`.
    pub extrinsic: BitMessage,
    /// `log Σ_{c_k} p(c_k, y)`.
    pub log_evidence: f64,
    /// Hard decisions on the information bits (termination excluded).
    pub info_decisions: Vec<u8>,
    pub branch_updates: u64,
    /// Demapper rows reset to uniform upstream of this decode.
    pub degenerate_rows: usize,
}

/// Soft-in soft-out decoding of one terminated codeword.
pub fn decoder_pass(bit_likelihoods: &BitMessage, code: &CodeTrellis) -> Result<DecoderOutput> {
    let bm = code_branch_metrics(bit_likelihoods, code)?;
    let fb = run_forward_backward(&bm, code, Boundary::Known(0), Boundary::Known(0))?;
    let joint = marginalize_bits(&fb, code);
    let floored = floor_message(bit_likelihoods);
    let extrinsic = joint.divide(&floored, f64::NEG_INFINITY)?;
    let info_len = fb.steps() - code.spec().termination_bits();
    let info_decisions = fb
        .marginalize_inputs(code, 2)
        .hard_decisions()
        .into_iter()
        .take(info_len)
        .map(|b| b as u8)
        .collect();
    Ok(DecoderOutput {
        joint,
        extrinsic,
        log_evidence: fb.log_evidence(),
        info_decisions,
        branch_updates: fb.branch_updates(),
        degenerate_rows: 0,
    })
}

/// Raises every entry to the row maximum plus the floor, so divisions by
/// (near-)zero likelihoods stay finite.
fn floor_message(msg: &LogMessage) -> LogMessage {
    let mut out = msg.clone();
    for t in 0..out.len() {
        let row = out.row_mut(t);
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top.is_finite() {
            row.iter_mut().for_each(|v| *v = v.max(top + PRIOR_FLOOR_LN));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurboConfig {
    pub n_turbo: usize,
    pub n_em_per_turbo: usize,
    pub detector: DetectorMode,
    pub margin: MarginRule,
}

impl Default for TurboConfig {
    fn default() -> Self {
        Self {
            n_turbo: 7,
            n_em_per_turbo: 5,
            detector: DetectorMode::Off,
            margin: MarginRule::default(),
        }
    }
}

/// Per-frame operation tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    pub em_passes: u64,
    pub em_branch_updates: u64,
    pub decoder_passes: u64,
    pub decoder_branch_updates: u64,
    pub detection_equalizer_passes: u64,
    pub detection_decoder_passes: u64,
    pub detection_branch_updates: u64,
}

#[derive(Clone, Debug)]
pub struct TurboOutcome {
    pub model: GaussianModel,
    /// Means after each EM iteration, `n_turbo · n_em_per_turbo` entries.
    /// When a refinement is applied, the entry for the last EM iteration of
    /// the first turbo pass holds the refined means.
    pub means_trajectory: Vec<Vec<Complex64>>,
    pub detection: Option<Refinement>,
    pub info_decisions: Vec<u8>,
    pub decoder_log_evidence: Vec<f64>,
    pub degenerate_rows: usize,
    pub ops: OpTally,
}

/// Runs the full receiver on one frame.
pub fn run_turbo(
    y: &[Complex64],
    init: GaussianModel,
    chain: ReceiverChain<'_>,
    config: &TurboConfig,
) -> Result<TurboOutcome> {
    if config.n_turbo == 0 || config.n_em_per_turbo == 0 {
        return Err(Error::InvalidConfig("turbo and EM iteration counts must be positive".into()));
    }
    let constellation = chain.isi.constellation();
    let m = constellation.order();
    check_len(
        "coded bits vs symbols",
        y.len() * constellation.bits_per_symbol(),
        chain.codeword_len(),
    )?;

    let mut model = init;
    let mut symbol_prior = LogMessage::uniform(y.len(), m);
    let mut bit_prior = LogMessage::uniform(chain.codeword_len(), 2);
    let mut means_trajectory = Vec::with_capacity(config.n_turbo * config.n_em_per_turbo);
    let mut detection = None;
    let mut decoder_log_evidence = Vec::with_capacity(config.n_turbo);
    let mut info_decisions = Vec::new();
    let mut degenerate_rows = 0;
    let mut ops = OpTally::default();

    for turbo_iter in 0..config.n_turbo {
        let run = run_em(
            y,
            model,
            &symbol_prior,
            config.n_em_per_turbo,
            chain.isi,
            Projection::Linear,
        )?;
        ops.em_passes += config.n_em_per_turbo as u64 + 1;
        ops.em_branch_updates += run.branch_updates;
        means_trajectory.extend(run.trajectory);
        model = run.model;
        let mut fb = run.final_fb;

        if turbo_iter == 0 && config.detector != DetectorMode::Off {
            let scored = score_hypotheses(y, &model.taps, model.sigma2(), chain, config.detector)?;
            ops.detection_equalizer_passes += scored.equalizer_passes;
            ops.detection_decoder_passes += scored.decoder_passes;
            ops.detection_branch_updates += scored.decoder_branch_updates;
            let refinement = select_and_refine(&scored.scores, &model, &config.margin, chain.isi)?;
            if refinement.applied {
                model = refinement.model.clone();
                *means_trajectory.last_mut().expect("at least one EM iteration") =
                    model.means.clone();
                fb = e_step(y, &model, &symbol_prior, chain.isi)?;
                ops.em_passes += 1;
                ops.em_branch_updates += fb.branch_updates();
            }
            detection = Some(refinement);
        }

        let posterior = marginalize_symbols(&fb, chain.isi);
        let extrinsic = equalizer_extrinsic(&posterior, &symbol_prior)?;
        let decoded = chain.decode_symbol_extrinsic(&extrinsic, &bit_prior)?;
        ops.decoder_passes += 1;
        ops.decoder_branch_updates += decoded.branch_updates;
        degenerate_rows += decoded.degenerate_rows;
        decoder_log_evidence.push(decoded.log_evidence);
        info_decisions = decoded.info_decisions;

        bit_prior = chain.interleaver.interleave_msg(&decoded.extrinsic)?;
        symbol_prior = constellation.map_soft(&bit_prior)?;
    }

    Ok(TurboOutcome {
        model,
        means_trajectory,
        detection,
        info_decisions,
        decoder_log_evidence,
        degenerate_rows,
        ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodeSpec;
    use crate::logmath::log_sum_exp;

    #[test]
    fn extrinsic_with_uniform_prior_is_scaled_posterior() {
        let post = LogMessage::from_probs(4, &[0.1, 0.2, 0.3, 0.4]).unwrap().normalized();
        let ext = equalizer_extrinsic(&post, &LogMessage::uniform(1, 4)).unwrap();
        for (e, p) in ext.row(0).iter().zip(post.row(0)) {
            assert!((e - p - 4f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn extrinsic_of_matching_prior_is_flat() {
        let post = LogMessage::from_probs(4, &[0.1, 0.2, 0.3, 0.4]).unwrap().normalized();
        let ext = equalizer_extrinsic(&post, &post).unwrap();
        assert!(ext.row(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn prior_floor_keeps_division_finite() {
        let post = LogMessage::from_probs(2, &[0.5, 0.5]).unwrap();
        let prior = LogMessage::hard(2, &[0]);
        let ext = equalizer_extrinsic(&post, &prior).unwrap();
        assert!(ext.row(0).iter().all(|v| v.is_finite()));
        assert!((ext.row(0)[1] - (0.5f64.ln() - PRIOR_FLOOR_LN)).abs() < 1e-12);
    }

    #[test]
    fn decoder_recovers_noiseless_codeword() {
        let spec = CodeSpec::rate_half_5_7();
        let code = CodeTrellis::new(&spec);
        let info = [1u8, 0, 1, 1, 0, 1, 0, 0, 1];
        let cw = spec.encode(&info).unwrap();
        let llh = LogMessage::hard(2, &cw.iter().map(|&b| b as usize).collect::<Vec<_>>());
        let out = decoder_pass(&llh, &code).unwrap();
        assert_eq!(out.info_decisions, info);
        // one codeword out of 2^K equally likely ones
        assert!((out.log_evidence + info.len() as f64 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(
            out.extrinsic.hard_decisions(),
            cw.iter().map(|&b| b as usize).collect::<Vec<_>>()
        );
    }

    #[test]
    fn uniform_likelihoods_decode_to_zeros_by_tie_rule() {
        let spec = CodeSpec::rate_half_5_7();
        let code = CodeTrellis::new(&spec);
        let n_c = spec.codeword_len(12);
        let out = decoder_pass(&LogMessage::uniform(n_c, 2), &code).unwrap();
        assert!((out.log_evidence + n_c as f64 * 2f64.ln()).abs() < 1e-9);
        assert_eq!(out.info_decisions.len(), 12);
        assert!(out.info_decisions.iter().all(|&b| b == 0));
    }

    #[test]
    fn joint_rows_sum_to_evidence_and_extrinsic_times_input_is_joint() {
        let spec = CodeSpec::rate_half_5_7();
        let code = CodeTrellis::new(&spec);
        let probs: Vec<f64> = (0..spec.codeword_len(6))
            .flat_map(|k| {
                let p = 0.15 + 0.7 * ((k * 37 % 11) as f64 / 10.0);
                [p, 1.0 - p]
            })
            .collect();
        let llh = LogMessage::from_probs(2, &probs).unwrap();
        let out = decoder_pass(&llh, &code).unwrap();
        for k in 0..out.joint.len() {
            let z = log_sum_exp(out.joint.row(k));
            assert!((z - out.log_evidence).abs() < 1e-9 * out.log_evidence.abs().max(1.0));
            for b in 0..2 {
                let back = out.extrinsic.row(k)[b] + llh.row(k)[b];
                assert!((back - out.joint.row(k)[b]).abs() < 1e-9);
            }
        }
    }
}
