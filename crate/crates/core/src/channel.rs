//! Block-invariant ISI channel with AWGN, SNR calibration and the
//! ground-truth channel profiles used in the experiments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{check_len, Error, Result};

/// Channel impulse response `h = [h_0, …, h_{L−1}]`; `h_0` multiplies the
/// current symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTaps(Vec<Complex64>);

impl ChannelTaps {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidConfig("a channel needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::InvalidConfig("non-finite channel tap".into()));
        }
        Ok(Self(taps))
    }

    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Circular shift by `shift` positions: `out[l] = h[(l − shift) mod L]`,
    /// so `(h0, h1, h2)` shifted by one is `(h2, h0, h1)`.
    pub fn circular_shift(&self, shift: usize) -> Self {
        let mut taps = self.0.clone();
        let n = taps.len();
        taps.rotate_right(shift % n);
        Self(taps)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|t| t * factor).collect())
    }
}

/// Known AWGN level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if variance > 0.0 && variance.is_finite() {
            Ok(Self { variance })
        } else {
            Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {variance}"
            )))
        }
    }

    /// Noise level for `SNR = ‖h‖²·E{|x|²}/σ²_w`.
    pub fn from_snr(taps: &ChannelTaps, snr_db: f64, symbol_energy: f64) -> Result<Self> {
        Self::new(sigma_from_snr(taps, snr_db, symbol_energy))
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn snr_db(&self, taps: &ChannelTaps, symbol_energy: f64) -> f64 {
        10.0 * (taps.energy() * symbol_energy / self.variance).log10()
    }
}

/// `σ²_w = ‖h‖²·E{|x|²} / 10^(snr_db/10)`.
pub fn sigma_from_snr(taps: &ChannelTaps, snr_db: f64, symbol_energy: f64) -> f64 {
    taps.energy() * symbol_energy / 10f64.powf(snr_db / 10.0)
}

/// Circular complex Gaussian sample with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// `y_t = Σ_l h_l·x_{t−l} + w_t`, with `x_t` for `t < 0` taken from
/// `preamble` (oldest first, length `L − 1`).
pub fn apply_channel<R: Rng + ?Sized>(
    x: &[Complex64],
    taps: &ChannelTaps,
    preamble: &[Complex64],
    noise_variance: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let l = taps.len();
    check_len("channel preamble", l - 1, preamble.len())?;
    if noise_variance < 0.0 {
        return Err(Error::InvalidConfig("negative noise variance".into()));
    }
    let full: Vec<Complex64> = preamble.iter().chain(x).copied().collect();
    let h = taps.as_slice();
    let y = (0..x.len())
        .map(|t| {
            let z: Complex64 = (0..l).map(|k| h[k] * full[t + l - 1 - k]).sum();
            if noise_variance > 0.0 {
                z + complex_gaussian(rng, noise_variance)
            } else {
                z
            }
        })
        .collect();
    Ok(y)
}

/// Ground-truth channel families with uniformly random tap phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelProfile {
    /// `(e^{jθ1}, −e^{jθ2})`
    L2,
    /// `(0.5e^{jθ1}, 0.7e^{jθ2}, 0.5e^{jθ3})`
    L3,
    /// `(0.38e^{jθ1}, 0.6e^{jθ2}, 0.6e^{jθ3}, 0.38e^{jθ4})`
    L4,
}

impl ChannelProfile {
    pub fn from_len(len: usize) -> Result<Self> {
        match len {
            2 => Ok(Self::L2),
            3 => Ok(Self::L3),
            4 => Ok(Self::L4),
            _ => Err(Error::InvalidConfig(format!("no channel profile with {len} taps"))),
        }
    }

    pub fn len(self) -> usize {
        self.gains().len()
    }

    /// Signed real tap gains.
    pub fn gains(self) -> &'static [f64] {
        match self {
            Self::L2 => &[1.0, -1.0],
            Self::L3 => &[0.5, 0.7, 0.5],
            Self::L4 => &[0.38, 0.6, 0.6, 0.38],
        }
    }

    pub fn with_phases(self, phases: &[f64]) -> Result<ChannelTaps> {
        check_len("channel phases", self.len(), phases.len())?;
        ChannelTaps::new(
            self.gains()
                .iter()
                .zip(phases)
                .map(|(&g, &th)| g * Complex64::from_polar(1.0, th))
                .collect(),
        )
    }

    /// Taps with i.i.d. `θ_l ~ U(0, 2π)`.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> ChannelTaps {
        let dist = Uniform::new(0.0, 2.0 * PI).expect("valid range");
        let phases: Vec<f64> = (0..self.len()).map(|_| dist.sample(rng)).collect();
        self.with_phases(&phases).expect("lengths match")
    }
}

/// Accepts `2`, `3`, `4` or `L2`, `L3`, `L4`.
impl std::str::FromStr for ChannelProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix(['L', 'l']).unwrap_or(s);
        let len = digits
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("unknown channel profile {s:?}")))?;
        Self::from_len(len)
    }
}

impl std::fmt::Display for ChannelProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}", self.len())
    }
}

/// Initial estimate `ĥ_l = h_l + ε_l`, `ε_l ~ CN(0, σ²_h)`.
pub fn perturb_init<R: Rng + ?Sized>(
    taps: &ChannelTaps,
    sigma_h2: f64,
    rng: &mut R,
) -> Result<ChannelTaps> {
    if !(sigma_h2 >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initialization variance must be non-negative, got {sigma_h2}"
        )));
    }
    if sigma_h2 == 0.0 {
        return Ok(taps.clone());
    }
    ChannelTaps::new(
        taps.as_slice()
            .iter()
            .map(|&h| h + complex_gaussian(rng, sigma_h2))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exact_cancellation() {
        let h = ChannelTaps::from_real(&[1.0, -1.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let y = apply_channel(&[c(1.0, 0.0); 2], &h, &[c(1.0, 0.0)], 0.0, &mut rng).unwrap();
        assert!(y.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn identity_channel() {
        let h = ChannelTaps::from_real(&[1.0]).unwrap();
        let x = vec![c(0.0, 1.0), c(-1.0, 0.0), c(0.3, 0.2)];
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert_eq!(apply_channel(&x, &h, &[], 0.0, &mut rng).unwrap(), x);
    }

    #[test]
    fn three_tap_convolution() {
        let h = ChannelTaps::from_real(&[0.5, 0.7, 0.5]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let one = c(1.0, 0.0);
        let y = apply_channel(&[one; 3], &h, &[one; 2], 0.0, &mut rng).unwrap();
        for v in y {
            assert!((v - c(1.7, 0.0)).norm() < 1e-12);
        }
        assert!(apply_channel(&[one; 3], &h, &[one], 0.0, &mut rng).is_err());
    }

    #[test]
    fn preamble_order_is_oldest_first() {
        // y_0 = h0 x0 + h1 x_{-1} + h2 x_{-2}, preamble = [x_{-2}, x_{-1}]
        let h = ChannelTaps::from_real(&[1.0, 10.0, 100.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let y = apply_channel(&[c(1.0, 0.0)], &h, &[c(2.0, 0.0), c(3.0, 0.0)], 0.0, &mut rng)
            .unwrap();
        assert!((y[0] - c(1.0 + 30.0 + 200.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn snr_calibration() {
        let h2 = ChannelProfile::L2.with_phases(&[0.3, 1.1]).unwrap();
        assert!((sigma_from_snr(&h2, 6.0, 1.0) - 2.0 / 10f64.powf(0.6)).abs() < 1e-12);
        assert!((sigma_from_snr(&h2, 6.0, 1.0) - 0.50238).abs() < 1e-5);
        let h3 = ChannelProfile::L3.with_phases(&[0.0; 3]).unwrap();
        assert!((sigma_from_snr(&h3, 6.0, 1.0) - 0.24868).abs() < 1e-5);
        let h1 = ChannelTaps::from_real(&[1.0]).unwrap();
        assert!((sigma_from_snr(&h1, 0.0, 1.0) - 1.0).abs() < 1e-15);
        let n = NoiseSpec::from_snr(&h3, 6.0, 1.0).unwrap();
        assert!((n.snr_db(&h3, 1.0) - 6.0).abs() < 1e-12);
        assert!(NoiseSpec::new(0.0).is_err());
    }

    #[test]
    fn profiles_with_zero_phases() {
        let t3 = ChannelProfile::L3.with_phases(&[0.0; 3]).unwrap();
        assert_eq!(t3, ChannelTaps::from_real(&[0.5, 0.7, 0.5]).unwrap());
        let t4 = ChannelProfile::L4.with_phases(&[0.0; 4]).unwrap();
        assert_eq!(t4, ChannelTaps::from_real(&[0.38, 0.6, 0.6, 0.38]).unwrap());
        let t2 = ChannelProfile::L2.with_phases(&[0.0; 2]).unwrap();
        assert_eq!(t2, ChannelTaps::from_real(&[1.0, -1.0]).unwrap());
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let a = ChannelProfile::L4.draw(&mut ChaCha12Rng::seed_from_u64(11));
        let b = ChannelProfile::L4.draw(&mut ChaCha12Rng::seed_from_u64(11));
        assert_eq!(a, b);
        for (t, g) in a.as_slice().iter().zip(ChannelProfile::L4.gains()) {
            assert!((t.norm() - g.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_shift_direction() {
        let h = ChannelTaps::from_real(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(h.circular_shift(1), ChannelTaps::from_real(&[2.0, 0.0, 1.0]).unwrap());
        assert_eq!(h.circular_shift(3), h);
    }

    #[test]
    fn perturbation_moments_and_determinism() {
        let h = ChannelTaps::from_real(&[0.0]).unwrap();
        assert_eq!(perturb_init(&h, 0.0, &mut ChaCha12Rng::seed_from_u64(1)).unwrap(), h);
        let a = perturb_init(&h, 0.5, &mut ChaCha12Rng::seed_from_u64(2)).unwrap();
        let b = perturb_init(&h, 0.5, &mut ChaCha12Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 100_000;
        let var = (0..n)
            .map(|_| perturb_init(&h, 0.5, &mut rng).unwrap().as_slice()[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((var / 0.5 - 1.0).abs() < 0.02, "empirical variance {var}");
        assert!(perturb_init(&h, -1.0, &mut rng).is_err());
    }

    #[test]
    fn empirical_snr_matches_configuration() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let h = ChannelProfile::L3.draw(&mut rng);
        let sigma2 = sigma_from_snr(&h, 6.0, 1.0);
        let x: Vec<Complex64> = (0..20_000)
            .map(|_| Complex64::from_polar(1.0, PI / 2.0 * rng.random_range(0..4) as f64))
            .collect();
        let pre = [c(1.0, 0.0); 2];
        let clean = apply_channel(&x, &h, &pre, 0.0, &mut rng).unwrap();
        let noisy = apply_channel(&x, &h, &pre, sigma2, &mut rng).unwrap();
        let signal = clean.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let noise = noisy
            .iter()
            .zip(&clean)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        let snr = 10.0 * (signal / noise).log10();
        assert!((snr - 6.0).abs() < 0.1, "empirical SNR {snr}");
    }
}
