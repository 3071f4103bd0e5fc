//! M-PSK alphabet with natural binary labeling, plus the hard and soft
//! mappings between coded bits and symbols.
//!
//! Symbol `i` sits at phase `2πi/M` and carries the label `i` written
//! MSB-first, so a rotation by `2π/M` is a pure index rotation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::logmath::{log_sum_exp, normalize_in_place};
use crate::message::{BitMessage, LogMessage, SymbolMessage};

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    /// M-PSK with `order` points; `order` must be a power of two (≥ 2).
    pub fn psk(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "PSK order {order} is not a power of two ≥ 2"
            )));
        }
        let points = (0..order)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / order as f64))
            .collect();
        Ok(Self {
            points,
            bits_per_symbol: order.trailing_zeros() as usize,
        })
    }

    pub fn qpsk() -> Self {
        Self::psk(4).expect("4 is a power of two")
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Average symbol energy, `E{|x|²}`.
    pub fn energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// Bit `j` (0 = MSB) of the label of symbol `index`.
    #[inline]
    pub fn label_bit(&self, index: usize, j: usize) -> u8 {
        ((index >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// Hard mapping of coded bits to symbol indices.
    pub fn map_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let m = self.bits_per_symbol;
        if !bits.len().is_multiple_of(m) {
            return Err(Error::LengthMismatch {
                what: "bit count not divisible by bits per symbol",
                expected: bits.len().next_multiple_of(m),
                actual: bits.len(),
            });
        }
        Ok(bits.chunks_exact(m).map(|c| self.index_of_bits(c)).collect())
    }

    /// Hard mapping of coded bits to constellation points.
    pub fn map_symbols(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .map_indices(bits)?
            .into_iter()
            .map(|i| self.points[i])
            .collect())
    }

    /// Labels of a symbol index sequence, concatenated.
    pub fn indices_to_bits(&self, indices: &[usize]) -> Vec<u8> {
        indices
            .iter()
            .flat_map(|&i| (0..self.bits_per_symbol).map(move |j| self.label_bit(i, j)))
            .collect()
    }

    /// Bit-to-symbol soft mapping: `p(x = i) = Π_j p(d_j = label_j(i))`.
    ///
    /// Bit rows are normalized first, so the output rows sum to one.
    pub fn map_soft(&self, bit_msg: &BitMessage) -> Result<SymbolMessage> {
        let m = self.bits_per_symbol;
        check_len("bit message width", 2, bit_msg.width())?;
        if !bit_msg.len().is_multiple_of(m) {
            return Err(Error::LengthMismatch {
                what: "bit message not divisible by bits per symbol",
                expected: bit_msg.len().next_multiple_of(m),
                actual: bit_msg.len(),
            });
        }
        let n_sym = bit_msg.len() / m;
        let order = self.order();
        let mut out = Vec::with_capacity(n_sym * order);
        let mut bit_rows = vec![[0.0f64; 2]; m];
        for t in 0..n_sym {
            for (j, row) in bit_rows.iter_mut().enumerate() {
                row.copy_from_slice(bit_msg.row(t * m + j));
                if normalize_in_place(row) == f64::NEG_INFINITY {
                    *row = [-(2f64.ln()); 2];
                }
            }
            let start = out.len();
            for i in 0..order {
                let lp: f64 = (0..m)
                    .map(|j| bit_rows[j][self.label_bit(i, j) as usize])
                    .sum();
                out.push(lp);
            }
            normalize_in_place(&mut out[start..]);
        }
        LogMessage::from_log(order, out, true)
    }

    /// Symbol-to-bit soft demapping with sibling-bit priors.
    ///
    /// For bit `j` of symbol `t`, the likelihood of `b` sums the symbol
    /// likelihoods of every label with `b` at position `j`, each weighted by
    /// the priors of the other bits in that label. The bit's own prior is
    /// excluded, so the output is extrinsic. Rows keep the symbol message's
    /// scale (unnormalized). Rows that vanish entirely are replaced with a
    /// uniform row and counted.
    pub fn demap_soft(&self, sym_msg: &SymbolMessage, bit_priors: &BitMessage) -> Result<Demapped> {
        let m = self.bits_per_symbol;
        let order = self.order();
        check_len("symbol message width", order, sym_msg.width())?;
        check_len("bit prior width", 2, bit_priors.width())?;
        check_len("bit prior length", sym_msg.len() * m, bit_priors.len())?;

        let mut out = Vec::with_capacity(sym_msg.len() * m * 2);
        let mut degenerate_rows = 0;
        let mut prior = vec![[0.0f64; 2]; m];
        let mut terms = vec![0.0f64; order / 2];
        for (t, sym_row) in sym_msg.rows().enumerate() {
            for (j, row) in prior.iter_mut().enumerate() {
                row.copy_from_slice(bit_priors.row(t * m + j));
                if normalize_in_place(row) == f64::NEG_INFINITY {
                    *row = [-(2f64.ln()); 2];
                }
            }
            for j in 0..m {
                let mut pair = [0.0f64; 2];
                for (b, slot) in pair.iter_mut().enumerate() {
                    terms.clear();
                    for (i, &s) in sym_row.iter().enumerate() {
                        if self.label_bit(i, j) as usize != b {
                            continue;
                        }
                        let others: f64 = (0..m)
                            .filter(|&k| k != j)
                            .map(|k| prior[k][self.label_bit(i, k) as usize])
                            .sum();
                        terms.push(s + others);
                    }
                    *slot = log_sum_exp(&terms);
                }
                if pair[0] == f64::NEG_INFINITY && pair[1] == f64::NEG_INFINITY {
                    degenerate_rows += 1;
                    pair = [-(2f64.ln()); 2];
                }
                out.extend_from_slice(&pair);
            }
        }
        Ok(Demapped {
            message: LogMessage::from_log(2, out, false)?,
            degenerate_rows,
        })
    }
}

/// Output of [`Constellation::demap_soft`].
#[derive(Clone, Debug)]
pub struct Demapped {
    pub message: BitMessage,
    /// Rows that were all-zero after marginalization and reset to uniform.
    pub degenerate_rows: usize,
}
