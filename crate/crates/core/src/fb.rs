//! Log-domain forward-backward (BCJR) inference over any [`Trellis`].
//!
//! Forward and backward messages are renormalized at every step and the
//! forward normalizers are accumulated, so the total log evidence
//! `log p(y_1^T | model)` stays exact for long frames.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::logmath::{log_sum_exp, normalize_in_place};
use crate::message::{BitMessage, LogMessage, SymbolMessage};
use crate::trellis::{CodeTrellis, IsiTrellis, Trellis};

/// Log branch metrics `log γ_t(e)`, one row of E entries per trellis section.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchMetrics {
    num_edges: usize,
    data: Vec<f64>,
    /// Likelihood factors multiplied into the metrics while building them.
    branch_updates: u64,
}

impl BranchMetrics {
    pub fn from_log(num_edges: usize, data: Vec<f64>) -> Result<Self> {
        if num_edges == 0 || !data.len().is_multiple_of(num_edges) {
            return Err(Error::InvalidConfig("branch metric table shape".into()));
        }
        if data.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidConfig("branch metrics must be finite or -inf".into()));
        }
        Ok(Self {
            num_edges,
            data,
            branch_updates: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.num_edges
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_edges..(t + 1) * self.num_edges]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.num_edges..(t + 1) * self.num_edges]
    }

    pub fn branch_updates(&self) -> u64 {
        self.branch_updates
    }
}

/// Boundary condition at either end of the trellis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Unknown state: uniform start distribution, unit end weight.
    Free,
    /// State known with certainty.
    Known(usize),
}

#[derive(Clone, Debug)]
pub struct FbResult {
    num_states: usize,
    num_edges: usize,
    /// (T+1)×S, each row normalized.
    alpha: Vec<f64>,
    /// (T+1)×S, each row normalized.
    beta: Vec<f64>,
    /// T×E, each row normalized.
    edge_posteriors: Vec<f64>,
    log_evidence: f64,
    branch_updates: u64,
}

impl FbResult {
    pub fn steps(&self) -> usize {
        self.edge_posteriors.len() / self.num_edges
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    pub fn branch_updates(&self) -> u64 {
        self.branch_updates
    }

    /// Normalized forward message `α_t`, `t ∈ 0..=T`.
    pub fn alpha(&self, t: usize) -> &[f64] {
        &self.alpha[t * self.num_states..(t + 1) * self.num_states]
    }

    /// Normalized backward message `β_t`, `t ∈ 0..=T`.
    pub fn beta(&self, t: usize) -> &[f64] {
        &self.beta[t * self.num_states..(t + 1) * self.num_states]
    }

    /// Log posterior `log p(δ_t = e | y)` for section `t` (0-based).
    pub fn edge_posteriors(&self, t: usize) -> &[f64] {
        &self.edge_posteriors[t * self.num_edges..(t + 1) * self.num_edges]
    }

    /// Unnormalized joint `log p(δ_t = e, y)`.
    pub fn edge_joint(&self, t: usize, e: usize) -> f64 {
        self.edge_posteriors(t)[e] + self.log_evidence
    }

    /// Responsibilities in the linear domain, T×E row-major.
    pub fn responsibilities(&self) -> Vec<f64> {
        self.edge_posteriors.iter().map(|v| v.exp()).collect()
    }

    /// Normalized posterior over the driving input of each section
    /// (symbols for the ISI trellis, information bits for a code trellis).
    pub fn marginalize_inputs<Tr: Trellis>(&self, tr: &Tr, alphabet: usize) -> SymbolMessage {
        let steps = self.steps();
        let mut out = vec![f64::NEG_INFINITY; steps * alphabet];
        let mut terms: Vec<Vec<f64>> = vec![Vec::new(); alphabet];
        for t in 0..steps {
            terms.iter_mut().for_each(Vec::clear);
            for (e, &p) in tr.edges().iter().zip(self.edge_posteriors(t)) {
                terms[e.input].push(p);
            }
            let row = &mut out[t * alphabet..(t + 1) * alphabet];
            for (slot, ts) in row.iter_mut().zip(&terms) {
                *slot = log_sum_exp(ts);
            }
            normalize_in_place(row);
        }
        LogMessage::from_log(alphabet, out, true).expect("posteriors are NaN-free")
    }
}

/// Runs the forward and backward recursions over precomputed branch metrics.
pub fn run_forward_backward<Tr: Trellis>(
    bm: &BranchMetrics,
    tr: &Tr,
    start: Boundary,
    end: Boundary,
) -> Result<FbResult> {
    let s_count = tr.num_states();
    let edges = tr.edges();
    check_len("branch metric width", edges.len(), bm.num_edges())?;
    for b in [start, end] {
        if let Boundary::Known(s) = b {
            if s >= s_count {
                return Err(Error::InvalidConfig(format!("boundary state {s} out of range")));
            }
        }
    }
    let steps = bm.steps();
    let mut alpha = vec![f64::NEG_INFINITY; (steps + 1) * s_count];
    let mut beta = vec![f64::NEG_INFINITY; (steps + 1) * s_count];

    match start {
        Boundary::Free => alpha[..s_count].fill(-(s_count as f64).ln()),
        Boundary::Known(s) => alpha[s] = 0.0,
    }
    let end_weights: Vec<f64> = match end {
        Boundary::Free => vec![0.0; s_count],
        Boundary::Known(s) => (0..s_count)
            .map(|k| if k == s { 0.0 } else { f64::NEG_INFINITY })
            .collect(),
    };

    let mut log_scale = 0.0;
    let mut vals = vec![0.0f64; edges.len()];
    let mut maxes = vec![f64::NEG_INFINITY; s_count];
    let mut sums = vec![0.0f64; s_count];
    for t in 0..steps {
        let gamma = bm.row(t);
        let (prev, next) = alpha.split_at_mut((t + 1) * s_count);
        let prev = &prev[t * s_count..];
        let next = &mut next[..s_count];
        maxes.fill(f64::NEG_INFINITY);
        for (i, e) in edges.iter().enumerate() {
            let v = prev[e.from] + gamma[i];
            vals[i] = v;
            if v > maxes[e.to] {
                maxes[e.to] = v;
            }
        }
        accumulate(edges.iter().map(|e| e.to), &vals, &maxes, &mut sums, next);
        let c = normalize_in_place(next);
        if c == f64::NEG_INFINITY {
            return Err(Error::NoSurvivingPath { step: t });
        }
        log_scale += c;
    }
    let final_terms: Vec<f64> = alpha[steps * s_count..]
        .iter()
        .zip(&end_weights)
        .map(|(a, b)| a + b)
        .collect();
    let tail = log_sum_exp(&final_terms);
    if tail == f64::NEG_INFINITY {
        return Err(Error::NoSurvivingPath { step: steps });
    }
    let log_evidence = log_scale + tail;

    beta[steps * s_count..].copy_from_slice(&end_weights);
    normalize_in_place(&mut beta[steps * s_count..]);
    for t in (0..steps).rev() {
        let gamma = bm.row(t);
        let (cur, next) = beta.split_at_mut((t + 1) * s_count);
        let cur = &mut cur[t * s_count..];
        let next = &next[..s_count];
        maxes.fill(f64::NEG_INFINITY);
        for (i, e) in edges.iter().enumerate() {
            let v = next[e.to] + gamma[i];
            vals[i] = v;
            if v > maxes[e.from] {
                maxes[e.from] = v;
            }
        }
        accumulate(edges.iter().map(|e| e.from), &vals, &maxes, &mut sums, cur);
        if normalize_in_place(cur) == f64::NEG_INFINITY {
            return Err(Error::NoSurvivingPath { step: t });
        }
    }

    let mut edge_posteriors = vec![0.0; steps * edges.len()];
    for t in 0..steps {
        let a = &alpha[t * s_count..(t + 1) * s_count];
        let b = &beta[(t + 1) * s_count..(t + 2) * s_count];
        let gamma = bm.row(t);
        let row = &mut edge_posteriors[t * edges.len()..(t + 1) * edges.len()];
        for (i, e) in edges.iter().enumerate() {
            row[i] = a[e.from] + gamma[i] + b[e.to];
        }
        if normalize_in_place(row) == f64::NEG_INFINITY {
            return Err(Error::NoSurvivingPath { step: t });
        }
    }

    Ok(FbResult {
        num_states: s_count,
        num_edges: edges.len(),
        alpha,
        beta,
        edge_posteriors,
        log_evidence,
        branch_updates: bm.branch_updates,
    })
}

/// `out[k] = max_k + ln Σ exp(v − max_k)` grouped by `keys`.
fn accumulate(
    keys: impl Iterator<Item = usize> + Clone,
    vals: &[f64],
    maxes: &[f64],
    sums: &mut [f64],
    out: &mut [f64],
) {
    sums.fill(0.0);
    for (k, &v) in keys.zip(vals) {
        if maxes[k] > f64::NEG_INFINITY {
            sums[k] += (v - maxes[k]).exp();
        }
    }
    for ((o, &m), &s) in out.iter_mut().zip(maxes).zip(sums.iter()) {
        *o = if m == f64::NEG_INFINITY { m } else { m + s.ln() };
    }
}

/// ISI branch metrics:
/// `log γ_t(e) = −ln(πσ²) − |y_t − μ_e|²/σ² + log p(x_t = input(e))`.
pub fn isi_branch_metrics(
    y: &[Complex64],
    means: &[Complex64],
    sigma2: f64,
    symbol_priors: &SymbolMessage,
    tr: &IsiTrellis,
) -> Result<BranchMetrics> {
    let edges = tr.edges();
    check_len("means vs trellis edges", edges.len(), means.len())?;
    check_len("symbol priors length", y.len(), symbol_priors.len())?;
    check_len(
        "symbol priors width",
        tr.constellation().order(),
        symbol_priors.width(),
    )?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig(format!("noise variance {sigma2} must be positive")));
    }
    let norm = -(std::f64::consts::PI * sigma2).ln();
    let mut data = Vec::with_capacity(y.len() * edges.len());
    let mut prior = vec![0.0; symbol_priors.width()];
    for (t, &yt) in y.iter().enumerate() {
        prior.copy_from_slice(symbol_priors.row(t));
        if !symbol_priors.is_normalized() {
            normalize_in_place(&mut prior);
        }
        for (e, mu) in edges.iter().zip(means) {
            data.push(norm - (yt - mu).norm_sqr() / sigma2 + prior[e.input]);
        }
    }
    Ok(BranchMetrics {
        num_edges: edges.len(),
        data,
        branch_updates: (y.len() * edges.len()) as u64,
    })
}

/// Code-trellis branch metrics from coded-bit likelihoods `log p(y | c_k)`.
///
/// Information sections carry an input prior of ½; the trailing termination
/// sections force a zero input.
pub fn code_branch_metrics(bit_likelihoods: &BitMessage, tr: &CodeTrellis) -> Result<BranchMetrics> {
    let spec = tr.spec();
    let n = spec.rate_inv();
    check_len("bit likelihood width", 2, bit_likelihoods.width())?;
    if !bit_likelihoods.len().is_multiple_of(n) || bit_likelihoods.len() / n <= spec.termination_bits() {
        return Err(Error::InvalidConfig(format!(
            "{} coded bits do not form a terminated codeword",
            bit_likelihoods.len()
        )));
    }
    let sections = bit_likelihoods.len() / n;
    let info_sections = sections - spec.termination_bits();
    let edges = tr.edges();
    let half = -(2f64.ln());
    let mut data = Vec::with_capacity(sections * edges.len());
    for k in 0..sections {
        for (i, e) in edges.iter().enumerate() {
            let prior = if k < info_sections {
                half
            } else if e.input == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            let llh: f64 = tr
                .edge_outputs(i)
                .iter()
                .enumerate()
                .map(|(j, &b)| bit_likelihoods.row(k * n + j)[b as usize])
                .sum();
            data.push(prior + llh);
        }
    }
    Ok(BranchMetrics {
        num_edges: edges.len(),
        data,
        branch_updates: (sections * edges.len() * n) as u64,
    })
}

/// Normalized symbol posteriors `p(x_t | y)`.
pub fn marginalize_symbols(fb: &FbResult, tr: &IsiTrellis) -> SymbolMessage {
    fb.marginalize_inputs(tr, tr.constellation().order())
}

/// Joint coded-bit probabilities `log p(c_k = b, y)`; every row sums to the
/// evidence `p(y)`.
pub fn marginalize_bits(fb: &FbResult, tr: &CodeTrellis) -> BitMessage {
    let n = tr.spec().rate_inv();
    let steps = fb.steps();
    let mut out = Vec::with_capacity(steps * n * 2);
    let mut terms = [Vec::new(), Vec::new()];
    for t in 0..steps {
        let post = fb.edge_posteriors(t);
        for j in 0..n {
            terms.iter_mut().for_each(Vec::clear);
            for (e, &p) in post.iter().enumerate() {
                terms[tr.edge_outputs(e)[j] as usize].push(p);
            }
            out.push(log_sum_exp(&terms[0]) + fb.log_evidence());
            out.push(log_sum_exp(&terms[1]) + fb.log_evidence());
        }
    }
    LogMessage::from_log(2, out, false).expect("joint is NaN-free")
}

/// Predicted branch-update counts for a frame of `symbols` symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpCount {
    /// `T·M^L` per equalizer (E-step) pass.
    pub isi_branch_updates: u64,
    /// `T·log2(M)·2^{L_c}` per decoder pass.
    pub decoder_branch_updates: u64,
}

pub fn count_operations(isi: &IsiTrellis, code: &CodeTrellis, symbols: usize) -> OpCount {
    let m = isi.constellation().order() as u64;
    let bps = isi.constellation().bits_per_symbol() as u64;
    let t = symbols as u64;
    OpCount {
        isi_branch_updates: t * m.pow(isi.memory() as u32),
        decoder_branch_updates: t * bps * (1u64 << code.spec().constraint_length()),
    }
}
