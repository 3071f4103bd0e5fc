//! Log-domain probability tables exchanged between the equalizer, the
//! demapper and the decoder.

use crate::error::{check_len, Error, Result};
use crate::logmath::normalize_in_place;

/// A positions × alphabet table of log-domain weights.
///
/// `normalized` records whether every row sums to one in the linear
/// domain. Unnormalized tables carry likelihood semantics and their per-row
/// offsets are significant (they feed model evidence).
#[derive(Clone, Debug, PartialEq)]
pub struct LogMessage {
    width: usize,
    data: Vec<f64>,
    normalized: bool,
}

/// Per-bit table, alphabet {0, 1}.
pub type BitMessage = LogMessage;
/// Per-symbol table, alphabet {0, …, M−1}.
pub type SymbolMessage = LogMessage;

impl LogMessage {
    pub fn uniform(len: usize, width: usize) -> Self {
        let v = -(width as f64).ln();
        Self {
            width,
            data: vec![v; len * width],
            normalized: true,
        }
    }

    /// Builds a table from row-major log weights. Rows are checked for NaN.
    pub fn from_log(width: usize, data: Vec<f64>, normalized: bool) -> Result<Self> {
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(Error::InvalidConfig(format!(
                "table of {} entries is not a multiple of width {width}",
                data.len()
            )));
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidConfig("message contains NaN".into()));
        }
        Ok(Self {
            width,
            data,
            normalized,
        })
    }

    /// Builds a table from linear-domain probabilities (rows need not sum to one).
    pub fn from_probs(width: usize, probs: &[f64]) -> Result<Self> {
        Self::from_log(width, probs.iter().map(|p| p.ln()).collect(), false)
    }

    /// A table with all mass on the given index at each position.
    pub fn hard(width: usize, indices: &[usize]) -> Self {
        let mut data = vec![f64::NEG_INFINITY; indices.len() * width];
        for (t, &i) in indices.iter().enumerate() {
            data[t * width + i] = 0.0;
        }
        Self {
            width,
            data,
            normalized: true,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, pos: usize) -> &[f64] {
        &self.data[pos * self.width..(pos + 1) * self.width]
    }

    pub fn row_mut(&mut self, pos: usize) -> &mut [f64] {
        &mut self.data[pos * self.width..(pos + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Row-wise normalization; returns the per-row log normalizers.
    pub fn normalize(&mut self) -> Vec<f64> {
        let z = self
            .data
            .chunks_exact_mut(self.width)
            .map(normalize_in_place)
            .collect();
        self.normalized = true;
        z
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Linear-domain row, normalized to sum to one.
    pub fn probs(&self, pos: usize) -> Vec<f64> {
        let mut row = self.row(pos).to_vec();
        normalize_in_place(&mut row);
        row.iter().map(|v| v.exp()).collect()
    }

    /// Argmax per row; ties resolve to the lowest index.
    pub fn hard_decisions(&self) -> Vec<usize> {
        self.rows()
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    /// Elementwise `self - other` in the log domain (division of likelihoods).
    /// Entries of `other` below `floor` are raised to it first.
    pub fn divide(&self, other: &LogMessage, floor: f64) -> Result<LogMessage> {
        check_len("message division", self.data.len(), other.data.len())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let b = b.max(floor);
                if a == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    a - b
                }
            })
            .collect();
        LogMessage::from_log(self.width, data, false)
    }

    /// Reorders rows: `out[i] = self[perm[i]]`.
    pub(crate) fn gather_rows(&self, perm: &[usize]) -> LogMessage {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        LogMessage {
            width: self.width,
            data,
            normalized: self.normalized,
        }
    }

    /// Inverse of [`gather_rows`](Self::gather_rows): `out[perm[i]] = self[i]`.
    pub(crate) fn scatter_rows(&self, perm: &[usize]) -> LogMessage {
        let mut data = vec![0.0; self.data.len()];
        let w = self.width;
        for (i, &p) in perm.iter().enumerate() {
            data[p * w..(p + 1) * w].copy_from_slice(self.row(i));
        }
        LogMessage {
            width: w,
            data,
            normalized: self.normalized,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rows_sum_to_one() {
        let m = LogMessage::uniform(3, 4);
        for t in 0..3 {
            let s: f64 = m.probs(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!((m.row(t)[0].exp() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn nan_rejected() {
        assert!(LogMessage::from_log(2, vec![0.0, f64::NAN], false).is_err());
        assert!(LogMessage::from_log(2, vec![0.0, 0.0, 1.0], false).is_err());
    }

    #[test]
    fn hard_decision_ties_pick_lowest() {
        let m = LogMessage::from_log(3, vec![0.0, 0.0, -1.0, -5.0, 2.0, 2.0], false).unwrap();
        assert_eq!(m.hard_decisions(), vec![0, 1]);
    }

    #[test]
    fn divide_floors_denominator() {
        let a = LogMessage::from_log(2, vec![-1.0, f64::NEG_INFINITY], false).unwrap();
        let b = LogMessage::from_log(2, vec![f64::NEG_INFINITY, -2.0], true).unwrap();
        let q = a.divide(&b, -10.0).unwrap();
        assert_eq!(q.row(0), &[9.0, f64::NEG_INFINITY]);
    }
}
