//! Seed derivation for reproducible Monte Carlo trials.
//!
//! Every trial draws from independent ChaCha streams keyed by
//! `(base_seed, trial, role)`: the base seed is the ChaCha key and
//! `trial · 2^8 + role` selects the stream. Trials therefore do not depend on
//! each other or on execution order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// What a random stream is used for inside one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Role {
    DataBits = 1,
    Interleaver = 2,
    ChannelPhases = 3,
    Preamble = 4,
    Noise = 5,
    InitPerturbation = 6,
}

pub fn trial_rng(base_seed: u64, trial: u64, role: Role) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream((trial << 8) | role as u64);
    rng
}

/// A 64-bit seed drawn from the `(trial, role)` stream.
pub fn trial_seed(base_seed: u64, trial: u64, role: Role) -> u64 {
    trial_rng(base_seed, trial, role).next_u64()
}
