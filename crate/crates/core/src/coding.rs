//! Feedforward convolutional encoder and the random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{check_len, Error, Result};
use crate::message::LogMessage;

/// Rate `1/n` feedforward convolutional code.
///
/// Each generator is a binary polynomial whose most significant bit (of
/// `constraint_length` bits) taps the current input; write them in octal,
/// e.g. `0o5, 0o7`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    generators: Vec<u32>,
    constraint_length: usize,
    termination_bits: usize,
}

impl CodeSpec {
    pub fn new(generators: Vec<u32>, termination_bits: usize) -> Result<Self> {
        if generators.is_empty() || generators.contains(&0) {
            return Err(Error::InvalidConfig(
                "a code needs at least one non-zero generator".into(),
            ));
        }
        let constraint_length = generators
            .iter()
            .map(|g| 32 - g.leading_zeros() as usize)
            .max()
            .unwrap_or(1);
        if constraint_length > 16 {
            return Err(Error::InvalidConfig(format!(
                "constraint length {constraint_length} too large"
            )));
        }
        if termination_bits < constraint_length - 1 {
            return Err(Error::InvalidConfig(format!(
                "{termination_bits} termination bits cannot flush {} memory cells",
                constraint_length - 1
            )));
        }
        Ok(Self {
            generators,
            constraint_length,
            termination_bits,
        })
    }

    /// The rate-1/2 `(5,7)_8` code terminated with two zero bits.
    pub fn rate_half_5_7() -> Self {
        Self::new(vec![0o5, 0o7], 2).expect("valid code")
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    /// Output bits per input bit.
    pub fn rate_inv(&self) -> usize {
        self.generators.len()
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn termination_bits(&self) -> usize {
        self.termination_bits
    }

    pub fn num_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Codeword length for `info_len` information bits.
    pub fn codeword_len(&self, info_len: usize) -> usize {
        (info_len + self.termination_bits) * self.rate_inv()
    }

    /// One encoder step: returns `(next_state, output bits packed MSB-first
    /// in generator order)`.
    #[inline]
    pub fn step(&self, state: usize, input: u8) -> (usize, u32) {
        let reg = ((input as usize) << (self.constraint_length - 1)) | state;
        let mut out = 0u32;
        for &g in &self.generators {
            out = (out << 1) | ((reg as u32 & g).count_ones() & 1);
        }
        (reg >> 1, out)
    }

    /// Encodes `info_bits` followed by the zero termination bits.
    pub fn encode(&self, info_bits: &[u8]) -> Result<Vec<u8>> {
        if info_bits.is_empty() {
            return Err(Error::InvalidConfig("no information bits".into()));
        }
        let n = self.rate_inv();
        let mut state = 0;
        let mut out = Vec::with_capacity(self.codeword_len(info_bits.len()));
        let padded = info_bits
            .iter()
            .copied()
            .chain(std::iter::repeat_n(0u8, self.termination_bits));
        for b in padded {
            let (next, bits) = self.step(state, b & 1);
            for j in (0..n).rev() {
                out.push(((bits >> j) & 1) as u8);
            }
            state = next;
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }
}

/// Bit interleaver: `output[i] = input[permutation[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    permutation: Vec<usize>,
    seed: Option<u64>,
}

impl Interleaver {
    /// Uniformly random permutation of `len` positions.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..len).collect();
        permutation.shuffle(&mut ChaCha12Rng::seed_from_u64(seed));
        Self {
            permutation,
            seed: Some(seed),
        }
    }

    pub fn identity(len: usize) -> Self {
        Self {
            permutation: (0..len).collect(),
            seed: None,
        }
    }

    pub fn from_permutation(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; permutation.len()];
        for &p in &permutation {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidConfig("permutation is not a bijection".into()));
            }
        }
        Ok(Self {
            permutation,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn interleave<T: Clone>(&self, input: &[T]) -> Result<Vec<T>> {
        check_len("interleaver input", self.len(), input.len())?;
        Ok(self.permutation.iter().map(|&p| input[p].clone()).collect())
    }

    pub fn deinterleave<T: Clone>(&self, input: &[T]) -> Result<Vec<T>> {
        check_len("deinterleaver input", self.len(), input.len())?;
        let mut out: Vec<Option<T>> = vec![None; input.len()];
        for (v, &p) in input.iter().zip(&self.permutation) {
            out[p] = Some(v.clone());
        }
        Ok(out.into_iter().map(|v| v.expect("bijection")).collect())
    }

    pub fn interleave_msg(&self, msg: &LogMessage) -> Result<LogMessage> {
        check_len("interleaver message", self.len(), msg.len())?;
        Ok(msg.gather_rows(&self.permutation))
    }

    pub fn deinterleave_msg(&self, msg: &LogMessage) -> Result<LogMessage> {
        check_len("deinterleaver message", self.len(), msg.len())?;
        Ok(msg.scatter_rows(&self.permutation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Output bit `j` at time `t` as a polynomial convolution over GF(2).
    fn convolve(info: &[u8], g: u32, lc: usize, t: usize) -> u8 {
        let mut acc = 0;
        for d in 0..lc {
            let tap = (g >> (lc - 1 - d)) & 1;
            if tap == 1 && t >= d {
                acc ^= info.get(t - d).copied().unwrap_or(0);
            }
        }
        acc
    }

    #[test]
    fn single_one_starts_with_one_one() {
        let code = CodeSpec::rate_half_5_7();
        let c = code.encode(&[1]).unwrap();
        assert_eq!(&c[..2], &[1, 1]);
        assert_eq!(c, vec![1, 1, 0, 1, 1, 1]);
    }

    #[test]
    fn encoder_matches_polynomial_convolution() {
        let code = CodeSpec::rate_half_5_7();
        let info = [1u8, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let c = code.encode(&info).unwrap();
        for t in 0..info.len() + 2 {
            for (j, &g) in code.generators().iter().enumerate() {
                assert_eq!(c[2 * t + j], convolve(&info, g, 3, t), "t={t} j={j}");
            }
        }
    }

    #[test]
    fn zero_input_zero_codeword_and_lengths() {
        let code = CodeSpec::rate_half_5_7();
        assert!(code.encode(&[0; 16]).unwrap().iter().all(|&b| b == 0));
        assert_eq!(code.encode(&vec![1; 10000]).unwrap().len(), 20004);
        assert_eq!(code.num_states(), 4);
        assert_eq!(code.constraint_length(), 3);
        assert!(code.encode(&[]).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(CodeSpec::new(vec![], 2).is_err());
        assert!(CodeSpec::new(vec![0o5, 0], 2).is_err());
        assert!(CodeSpec::new(vec![0o5, 0o7], 1).is_err());
    }

    #[test]
    fn permutation_convention() {
        let il = Interleaver::from_permutation(vec![2, 0, 1]).unwrap();
        let out = il.interleave(&['a', 'b', 'c']).unwrap();
        assert_eq!(out, vec!['c', 'a', 'b']);
        assert_eq!(il.deinterleave(&out).unwrap(), vec!['a', 'b', 'c']);
        assert!(il.interleave(&[1, 2]).is_err());
        assert!(Interleaver::from_permutation(vec![0, 0, 1]).is_err());
        assert!(Interleaver::from_permutation(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn identity_and_seeded_random() {
        let x: Vec<u32> = (0..7).collect();
        assert_eq!(Interleaver::identity(7).interleave(&x).unwrap(), x);
        let a = Interleaver::random(20004, 9);
        assert_eq!(a, Interleaver::random(20004, 9));
        let mut sorted = a.permutation().to_vec();
        sorted.sort_unstable();
        assert!(sorted.iter().enumerate().all(|(i, &p)| i == p));
        let y: Vec<usize> = (0..20004).collect();
        assert_eq!(a.deinterleave(&a.interleave(&y).unwrap()).unwrap(), y);
    }
}
