//! MAP equalization of a known ISI channel with the log-domain BCJR.
//!
//! cargo run --example bcjr_equalizer

use codeaided_em::channel::{apply_channel, sigma_from_snr, ChannelProfile};
use codeaided_em::em::e_step;
use codeaided_em::fb::marginalize_symbols;
use codeaided_em::rng::{trial_rng, Role};
use codeaided_em::{Constellation, GaussianModel, IsiTrellis, LogMessage, Trellis};
use rand::Rng;

fn main() -> codeaided_em::Result<()> {
    let qpsk = Constellation::qpsk();
    let n = 4000;
    let mut rng = trial_rng(3, 0, Role::DataBits);
    let sent: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
    let x: Vec<_> = sent.iter().map(|&i| qpsk.point(i)).collect();

    for profile in [ChannelProfile::L2, ChannelProfile::L3, ChannelProfile::L4] {
        let taps = profile.with_phases(&vec![0.0; profile.len()])?;
        let tr = IsiTrellis::new(&qpsk, profile.len())?;
        println!("{profile}: {} states, {} edges", tr.num_states(), tr.num_edges());
        for snr_db in [4.0, 8.0, 12.0] {
            let sigma2 = sigma_from_snr(&taps, snr_db, qpsk.energy());
            let pre = vec![qpsk.point(0); taps.len() - 1];
            let y = apply_channel(&x, &taps, &pre, sigma2, &mut trial_rng(3, 0, Role::Noise))?;
            let model = GaussianModel::from_taps(&tr, taps.clone(), sigma2)?;
            let fb = e_step(&y, &model, &LogMessage::uniform(n, 4), &tr)?;
            let decided = marginalize_symbols(&fb, &tr).hard_decisions();
            let errors = decided.iter().zip(&sent).filter(|(a, b)| a != b).count();
            println!(
                "  {snr_db:4.1} dB: SER {:.4}, log p(y) = {:.1}",
                errors as f64 / n as f64,
                fb.log_evidence()
            );
        }
    }
    Ok(())
}
