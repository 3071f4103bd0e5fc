//! Finite-state trellises: the ISI channel trellis with its symbol-tuple
//! regression matrix, and the convolutional-code trellis.
//!
//! ISI indexing: a state is the base-M number formed by the last `L − 1`
//! symbol indices, most recent symbol in the least significant digit. Edge
//! `e = from·M + x_t`, so the base-M digits of `e` are
//! `(x_t, x_{t−1}, …, x_{t−L+1})` from least to most significant and the
//! destination state is `e mod M^(L−1)`.

use num_complex::Complex64;

use crate::channel::ChannelTaps;
use crate::coding::CodeSpec;
use crate::constellation::Constellation;
use crate::error::{check_len, Error, Result};

/// A directed transition between two states of one trellis section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Driving input: a symbol index (ISI) or an information bit (code).
    pub input: usize,
}

/// Time-invariant section structure shared by the forward-backward engine.
pub trait Trellis {
    fn num_states(&self) -> usize;
    fn edges(&self) -> &[Edge];
}

#[derive(Clone, Debug)]
pub struct IsiTrellis {
    constellation: Constellation,
    memory: usize,
    num_states: usize,
    edges: Vec<Edge>,
    /// Row-major E×L, column `k` multiplies `h_k`.
    d_matrix: Vec<Complex64>,
    /// Row-major L×E, `(DᴴD)⁻¹Dᴴ`.
    pseudo_inverse: Vec<Complex64>,
}

impl IsiTrellis {
    pub fn new(constellation: &Constellation, memory: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidConfig("channel length must be at least 1".into()));
        }
        let m = constellation.order();
        let num_states = m.pow(memory as u32 - 1);
        let num_edges = num_states * m;
        let edges = (0..num_edges)
            .map(|e| Edge {
                from: e / m,
                to: e % num_states,
                input: e % m,
            })
            .collect();
        let mut d_matrix = Vec::with_capacity(num_edges * memory);
        for e in 0..num_edges {
            let mut rest = e;
            for _ in 0..memory {
                d_matrix.push(constellation.point(rest % m));
                rest /= m;
            }
        }
        let pseudo_inverse = pseudo_inverse(&d_matrix, num_edges, memory)?;
        Ok(Self {
            constellation: constellation.clone(),
            memory,
            num_states,
            edges,
            d_matrix,
            pseudo_inverse,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Channel length `L`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Row `e` of `D`: `[x_t, x_{t−1}, …, x_{t−L+1}]` for edge `e`.
    pub fn d_row(&self, e: usize) -> &[Complex64] {
        &self.d_matrix[e * self.memory..(e + 1) * self.memory]
    }

    /// Symbol indices `[x_t, …, x_{t−L+1}]` generating edge `e`.
    pub fn edge_symbols(&self, e: usize) -> Vec<usize> {
        let m = self.constellation.order();
        let mut rest = e;
        (0..self.memory)
            .map(|_| {
                let s = rest % m;
                rest /= m;
                s
            })
            .collect()
    }

    /// Edge generated by the symbol window `[x_t, …, x_{t−L+1}]`.
    pub fn edge_of_symbols(&self, window: &[usize]) -> usize {
        let m = self.constellation.order();
        window.iter().rev().fold(0, |acc, &s| acc * m + s)
    }

    pub fn d_matrix(&self) -> &[Complex64] {
        &self.d_matrix
    }

    /// Noiseless edge outputs `μ = D·h`.
    pub fn means_from_taps(&self, taps: &ChannelTaps) -> Result<Vec<Complex64>> {
        check_len("channel taps vs trellis memory", self.memory, taps.len())?;
        let h = taps.as_slice();
        Ok(self
            .d_matrix
            .chunks_exact(self.memory)
            .map(|row| row.iter().zip(h).map(|(d, h)| d * h).sum())
            .collect())
    }

    /// Least-squares taps `ĥ = (DᴴD)⁻¹Dᴴ μ̃`.
    pub fn taps_from_means(&self, means: &[Complex64]) -> Result<ChannelTaps> {
        check_len("means vs trellis edges", self.num_edges(), means.len())?;
        let taps = self
            .pseudo_inverse
            .chunks_exact(self.num_edges())
            .map(|row| row.iter().zip(means).map(|(p, m)| p * m).sum())
            .collect();
        ChannelTaps::new(taps)
    }
}

impl Trellis for IsiTrellis {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// `(DᴴD)⁻¹Dᴴ` via Cholesky of the L×L Gram matrix.
fn pseudo_inverse(d: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    let mut gram = vec![Complex64::new(0.0, 0.0); cols * cols];
    for r in 0..rows {
        let row = &d[r * cols..(r + 1) * cols];
        for i in 0..cols {
            for j in 0..cols {
                gram[i * cols + j] += row[i].conj() * row[j];
            }
        }
    }
    // G = C Cᴴ, C lower triangular
    let mut chol = vec![Complex64::new(0.0, 0.0); cols * cols];
    let scale = (0..cols).map(|i| gram[i * cols + i].re).fold(0.0, f64::max);
    for i in 0..cols {
        for j in 0..=i {
            let mut s = gram[i * cols + j];
            for k in 0..j {
                s -= chol[i * cols + k] * chol[j * cols + k].conj();
            }
            if i == j {
                if s.re <= 1e-12 * scale.max(1.0) {
                    return Err(Error::RankDeficient { pivot: s.re });
                }
                chol[i * cols + i] = Complex64::new(s.re.sqrt(), 0.0);
            } else {
                chol[i * cols + j] = s / chol[j * cols + j];
            }
        }
    }
    // Solve G X = Dᴴ column by column.
    let mut out = vec![Complex64::new(0.0, 0.0); cols * rows];
    let mut z = vec![Complex64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for i in 0..cols {
            let mut s = d[r * cols + i].conj();
            for k in 0..i {
                s -= chol[i * cols + k] * z[k];
            }
            z[i] = s / chol[i * cols + i];
        }
        for i in (0..cols).rev() {
            let mut s = z[i];
            for k in i + 1..cols {
                s -= chol[k * cols + i].conj() * out[k * rows + r];
            }
            out[i * rows + r] = s / chol[i * cols + i];
        }
    }
    Ok(out)
}

/// State machine of a feedforward convolutional code. Edge `2·s + b` leaves
/// state `s` on input bit `b`.
#[derive(Clone, Debug)]
pub struct CodeTrellis {
    spec: CodeSpec,
    edges: Vec<Edge>,
    /// Output bits per edge, generator order.
    outputs: Vec<Vec<u8>>,
}

impl CodeTrellis {
    pub fn new(spec: &CodeSpec) -> Self {
        let n = spec.rate_inv();
        let mut edges = Vec::with_capacity(2 * spec.num_states());
        let mut outputs = Vec::with_capacity(2 * spec.num_states());
        for s in 0..spec.num_states() {
            for b in 0..2u8 {
                let (next, bits) = spec.step(s, b);
                edges.push(Edge {
                    from: s,
                    to: next,
                    input: b as usize,
                });
                outputs.push((0..n).rev().map(|j| ((bits >> j) & 1) as u8).collect());
            }
        }
        Self {
            spec: spec.clone(),
            edges,
            outputs,
        }
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn edge_outputs(&self, e: usize) -> &[u8] {
        &self.outputs[e]
    }

    /// `(next_state, outputs)` for `(state, input)`.
    pub fn transition(&self, state: usize, input: u8) -> (usize, &[u8]) {
        let e = 2 * state + input as usize;
        (self.edges[e].to, &self.outputs[e])
    }
}

impl Trellis for CodeTrellis {
    fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check_structure(tr: &IsiTrellis) {
        let m = tr.constellation().order();
        let s = tr.num_states();
        let mut out_deg = vec![0; s];
        let mut in_deg = vec![0; s];
        let mut pairs = std::collections::HashSet::new();
        for e in tr.edges() {
            out_deg[e.from] += 1;
            in_deg[e.to] += 1;
            assert!(pairs.insert((e.from, e.to)) || tr.memory() == 1);
        }
        assert!(out_deg.iter().all(|&d| d == m));
        assert!(in_deg.iter().all(|&d| d == m));
        let mut rows = std::collections::HashSet::new();
        for e in 0..tr.num_edges() {
            let key: Vec<usize> = tr.edge_symbols(e);
            assert_eq!(tr.edge_of_symbols(&key), e);
            assert!(rows.insert(key));
        }
        assert_eq!(rows.len(), m.pow(tr.memory() as u32));
    }

    #[test]
    fn qpsk_sizes() {
        let q = Constellation::qpsk();
        let t2 = IsiTrellis::new(&q, 2).unwrap();
        assert_eq!((t2.num_states(), t2.num_edges()), (4, 16));
        let t3 = IsiTrellis::new(&q, 3).unwrap();
        assert_eq!((t3.num_states(), t3.num_edges()), (16, 64));
        check_structure(&t2);
        check_structure(&t3);
        check_structure(&IsiTrellis::new(&q, 4).unwrap());
        check_structure(&IsiTrellis::new(&Constellation::psk(8).unwrap(), 2).unwrap());
        assert!(IsiTrellis::new(&q, 0).is_err());
    }

    #[test]
    fn memory_one_is_the_constellation() {
        let c8 = Constellation::psk(8).unwrap();
        let t = IsiTrellis::new(&c8, 1).unwrap();
        assert_eq!((t.num_states(), t.num_edges()), (1, 8));
        assert_eq!(t.d_matrix(), c8.points());
        let mu = t.means_from_taps(&ChannelTaps::from_real(&[1.0]).unwrap()).unwrap();
        assert_eq!(mu, c8.points());
    }

    #[test]
    fn transitions_follow_symbol_windows() {
        let t = IsiTrellis::new(&Constellation::qpsk(), 3).unwrap();
        for e in t.edges() {
            // new state's digits: (x_t, x_{t-1}); old state's: (x_{t-1}, x_{t-2})
            let e_idx = e.from * 4 + e.input;
            let syms = t.edge_symbols(e_idx);
            assert_eq!(e.to, syms[0] + 4 * syms[1]);
            assert_eq!(e.from, syms[1] + 4 * syms[2]);
        }
    }

    #[test]
    fn means_are_dot_products() {
        let q = Constellation::qpsk();
        let t2 = IsiTrellis::new(&q, 2).unwrap();
        let mu = t2.means_from_taps(&ChannelTaps::from_real(&[1.0, -1.0]).unwrap()).unwrap();
        assert!(mu[t2.edge_of_symbols(&[0, 0])].norm() < 1e-15);
        assert!((mu[t2.edge_of_symbols(&[0, 2])] - c(2.0, 0.0)).norm() < 1e-12);

        let t3 = IsiTrellis::new(&q, 3).unwrap();
        let h = ChannelTaps::from_real(&[0.5, 0.7, 0.5]).unwrap();
        let mu = t3.means_from_taps(&h).unwrap();
        // row [1, j, -1]
        let e = t3.edge_of_symbols(&[0, 1, 2]);
        assert!((mu[e] - c(0.0, 0.7)).norm() < 1e-12);
        assert!(t3.means_from_taps(&ChannelTaps::from_real(&[1.0]).unwrap()).is_err());
    }

    #[test]
    fn pseudo_inverse_recovers_taps() {
        let q = Constellation::qpsk();
        for l in 1..=4 {
            let t = IsiTrellis::new(&q, l).unwrap();
            let h = ChannelTaps::new(
                (0..l).map(|k| c(0.3 * k as f64 - 0.4, 0.9 - 0.2 * k as f64)).collect(),
            )
            .unwrap();
            let back = t.taps_from_means(&t.means_from_taps(&h).unwrap()).unwrap();
            for (a, b) in back.as_slice().iter().zip(h.as_slice()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_gram_is_rejected() {
        let d = vec![c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)];
        assert!(matches!(
            pseudo_inverse(&d, 2, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn code_trellis_matches_encoder() {
        let spec = CodeSpec::rate_half_5_7();
        let tr = CodeTrellis::new(&spec);
        assert_eq!(tr.num_states(), 4);
        assert_eq!(tr.transition(0, 1).1, &[1, 1]);
        assert_eq!(tr.transition(0, 0), (0, &[0u8, 0][..]));
        for s in 0..4 {
            for b in 0..2u8 {
                let (next, bits) = spec.step(s, b);
                let (tn, tb) = tr.transition(s, b);
                assert_eq!(next, tn);
                assert_eq!(tb, &[((bits >> 1) & 1) as u8, (bits & 1) as u8]);
            }
        }
    }
}
