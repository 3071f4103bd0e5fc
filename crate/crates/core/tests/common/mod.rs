#![allow(dead_code)]

use codeaided_em::logmath::log_sum_exp;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let n = rand_distr::StandardNormal;
    Complex64::new(s * rng.sample::<f64, _>(n), s * rng.sample::<f64, _>(n))
}

pub fn qpsk_point(i: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * i as f64)
}

/// Brute-force posteriors of an ISI channel with uniform symbols and a
/// uniformly distributed initial state.
pub struct IsiEnumeration {
    pub log_evidence: f64,
    /// `[t][e]` edge posterior probabilities.
    pub edges: Vec<Vec<f64>>,
    /// `[t][x]` symbol posterior probabilities.
    pub symbols: Vec<Vec<f64>>,
}

/// Enumerates all `M^(L−1+T)` sequences of QPSK symbols.
pub fn enumerate_isi(y: &[Complex64], taps: &[Complex64], sigma2: f64) -> IsiEnumeration {
    let m = 4usize;
    let l = taps.len();
    let t_len = y.len();
    let total = t_len + l - 1;
    let n_seq = m.pow(total as u32);
    let n_edges = m.pow(l as u32);
    let log_prior = -(total as f64) * (m as f64).ln();
    let mut log_w = Vec::with_capacity(n_seq);
    let mut seqs = Vec::with_capacity(n_seq);
    for code in 0..n_seq {
        // seq[0..l−1] precede the frame, oldest first
        let seq: Vec<usize> = (0..total).map(|k| (code / m.pow(k as u32)) % m).collect();
        let mut lw = log_prior;
        for t in 0..t_len {
            let mu: Complex64 = (0..l).map(|k| taps[k] * qpsk_point(seq[t + l - 1 - k])).sum();
            lw += -(std::f64::consts::PI * sigma2).ln() - (y[t] - mu).norm_sqr() / sigma2;
        }
        log_w.push(lw);
        seqs.push(seq);
    }
    let z = log_sum_exp(&log_w);
    let mut edges = vec![vec![0.0; n_edges]; t_len];
    let mut symbols = vec![vec![0.0; m]; t_len];
    for (seq, lw) in seqs.iter().zip(&log_w) {
        let p = (lw - z).exp();
        for t in 0..t_len {
            // edge digits, least significant first: x_t, x_{t−1}, …
            let e: usize = (0..l).map(|k| seq[t + l - 1 - k] * m.pow(k as u32)).sum();
            edges[t][e] += p;
            symbols[t][seq[t + l - 1]] += p;
        }
    }
    IsiEnumeration {
        log_evidence: z,
        edges,
        symbols,
    }
}

/// Terminated feedforward encoder by direct GF(2) convolution.
pub fn convolve_encode(info: &[u8], generators: &[u32], constraint: usize) -> Vec<u8> {
    let mut padded = info.to_vec();
    padded.extend(std::iter::repeat_n(0u8, constraint - 1));
    let mut out = Vec::new();
    for k in 0..padded.len() {
        for &g in generators {
            let mut bit = 0u8;
            for j in 0..constraint {
                // tap j of g (MSB = current input) multiplies u_{k−j}
                if (g >> (constraint - 1 - j)) & 1 == 1 && k >= j {
                    bit ^= padded[k - j];
                }
            }
            out.push(bit);
        }
    }
    out
}

pub struct CodeEnumeration {
    pub log_evidence: f64,
    /// `[k][b]` posterior `p(c_k = b | y)`.
    pub posteriors: Vec<[f64; 2]>,
}

/// Bayes over the full codebook with equiprobable information words.
pub fn enumerate_code(bit_llh: &[[f64; 2]], k_info: usize) -> CodeEnumeration {
    let words = 1usize << k_info;
    let mut log_w = Vec::with_capacity(words);
    let mut cws = Vec::with_capacity(words);
    for w in 0..words {
        let info: Vec<u8> = (0..k_info).map(|i| ((w >> i) & 1) as u8).collect();
        let cw = convolve_encode(&info, &[0o5, 0o7], 3);
        assert_eq!(cw.len(), bit_llh.len());
        let lw = -(k_info as f64) * 2f64.ln()
            + cw.iter()
                .zip(bit_llh)
                .map(|(&c, l)| l[c as usize])
                .sum::<f64>();
        log_w.push(lw);
        cws.push(cw);
    }
    let z = log_sum_exp(&log_w);
    let mut posteriors = vec![[0.0; 2]; bit_llh.len()];
    for (cw, lw) in cws.iter().zip(&log_w) {
        let p = (lw - z).exp();
        for (post, &c) in posteriors.iter_mut().zip(cw) {
            post[c as usize] += p;
        }
    }
    CodeEnumeration {
        log_evidence: z,
        posteriors,
    }
}

/// Sorts complex values for multiset comparison.
pub fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Greedy multiset match within `tol`.
pub fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        match (0..b.len()).find(|&j| !used[j] && (b[j] - x).norm() <= tol) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    (centre - half, centre + half)
}
