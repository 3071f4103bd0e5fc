//! Blind channel estimation for coded M-PSK over an unknown ISI channel.
//!
//! The receiver models each received sample as a mixture of `M^L` complex
//! Gaussians, one per channel-trellis edge, and estimates the means with EM
//! run over a BCJR equalizer. The equalizer exchanges soft information with
//! a convolutional decoder (turbo loop), and an optional detector resolves the
//! phase and tap-shift ambiguities that the mixture model alone cannot see.
//!
//! ```
//! use codeaided_em::{Constellation, CodeSpec, IsiTrellis, ChannelTaps};
//! use num_complex::Complex64;
//!
//! let qpsk = Constellation::qpsk();
//! let isi = IsiTrellis::new(&qpsk, 2).unwrap();
//! let taps = ChannelTaps::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
//! let means = isi.means_from_taps(&taps).unwrap();
//! assert_eq!(means.len(), 16);
//! assert_eq!(CodeSpec::rate_half_5_7().encode(&[1]).unwrap(), vec![1, 1, 0, 1, 1, 1]);
//! ```

pub mod ambiguity;
pub mod channel;
pub mod coding;
pub mod constellation;
pub mod em;
pub mod error;
pub mod experiment;
pub mod fb;
pub mod logmath;
pub mod message;
pub mod rng;
pub mod trellis;
pub mod turbo;

pub use ambiguity::{DetectorMode, MarginRule, Refinement};
pub use channel::{ChannelProfile, ChannelTaps, NoiseSpec};
pub use coding::{CodeSpec, Interleaver};
pub use constellation::Constellation;
pub use em::{run_em, GaussianModel, Projection};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_trial, RunConfig, Summary, TrialRecord};
pub use fb::{run_forward_backward, Boundary, FbResult};
pub use message::{BitMessage, LogMessage, SymbolMessage};
pub use trellis::{CodeTrellis, IsiTrellis, Trellis};
pub use turbo::{run_turbo, ReceiverChain, TurboConfig, TurboOutcome};
