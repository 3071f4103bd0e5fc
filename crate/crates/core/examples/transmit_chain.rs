//! Encode, interleave, map to QPSK and pass through an ISI channel with AWGN.
//!
//! cargo run --example transmit_chain

use codeaided_em::channel::{apply_channel, sigma_from_snr, ChannelProfile};
use codeaided_em::rng::{trial_rng, Role};
use codeaided_em::{CodeSpec, Constellation, Interleaver};
use num_complex::Complex64;
use rand::Rng;

fn main() -> codeaided_em::Result<()> {
    let (seed, trial) = (7, 0);
    let code = CodeSpec::rate_half_5_7();
    let qpsk = Constellation::qpsk();

    let mut bits_rng = trial_rng(seed, trial, Role::DataBits);
    let info: Vec<u8> = (0..5000).map(|_| bits_rng.random_range(0..2)).collect();
    let codeword = code.encode(&info)?;
    let interleaver = Interleaver::random(codeword.len(), 99);
    let symbols = qpsk.map_symbols(&interleaver.interleave(&codeword)?)?;
    println!(
        "{} info bits -> {} coded bits -> {} QPSK symbols",
        info.len(),
        codeword.len(),
        symbols.len()
    );

    let taps = ChannelProfile::L3.draw(&mut trial_rng(seed, trial, Role::ChannelPhases));
    println!("channel taps:");
    for (l, h) in taps.as_slice().iter().enumerate() {
        println!("  h{l} = {:+.3}{:+.3}j  |h| = {:.2}", h.re, h.im, h.norm());
    }

    for snr_db in [0.0, 6.0, 12.0] {
        let sigma2 = sigma_from_snr(&taps, snr_db, qpsk.energy());
        let preamble = vec![qpsk.point(0); taps.len() - 1];
        let y = apply_channel(&symbols, &taps, &preamble, sigma2, &mut trial_rng(seed, trial, Role::Noise))?;
        let clean = apply_channel(&symbols, &taps, &preamble, 0.0, &mut trial_rng(seed, trial, Role::Noise))?;
        let noise: f64 = y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / y.len() as f64;
        let signal: f64 = clean.iter().map(Complex64::norm_sqr).sum::<f64>() / y.len() as f64;
        println!(
            "SNR {snr_db:4.1} dB: sigma2 = {sigma2:.4}, measured {:.2} dB",
            10.0 * (signal / noise).log10()
        );
    }
    Ok(())
}
