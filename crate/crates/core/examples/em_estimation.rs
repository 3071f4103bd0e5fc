//! Blind EM estimation of the Gaussian means of an uncoded ISI channel, with
//! and without the linear channel-model projection.
//!
//! cargo run --example em_estimation

use codeaided_em::channel::{apply_channel, perturb_init, sigma_from_snr, ChannelProfile};
use codeaided_em::experiment::compute_mse;
use codeaided_em::rng::{trial_rng, Role};
use codeaided_em::{run_em, Constellation, GaussianModel, IsiTrellis, LogMessage, Projection};
use rand::Rng;

fn main() -> codeaided_em::Result<()> {
    let qpsk = Constellation::qpsk();
    let profile = ChannelProfile::L2;
    let tr = IsiTrellis::new(&qpsk, profile.len())?;
    let n = 3000;

    let mut rng = trial_rng(5, 0, Role::DataBits);
    let x: Vec<_> = (0..n).map(|_| qpsk.point(rng.random_range(0..4))).collect();
    let taps = profile.draw(&mut trial_rng(5, 0, Role::ChannelPhases));
    let sigma2 = sigma_from_snr(&taps, 10.0, qpsk.energy());
    let pre = vec![qpsk.point(0); taps.len() - 1];
    let y = apply_channel(&x, &taps, &pre, sigma2, &mut trial_rng(5, 0, Role::Noise))?;
    let truth = tr.means_from_taps(&taps)?;

    let init_taps = perturb_init(&taps, 0.05, &mut trial_rng(5, 0, Role::InitPerturbation))?;
    for projection in [Projection::Linear, Projection::None] {
        let init = GaussianModel::from_taps(&tr, init_taps.clone(), sigma2)?;
        let run = run_em(&y, init, &LogMessage::uniform(n, 4), 15, &tr, projection)?;
        println!("{projection:?}:");
        println!("  iter  log p(y)        MSE");
        for (k, mu) in run.trajectory.iter().enumerate() {
            println!(
                "  {:4}  {:12.2}  {:.3e}",
                k + 1,
                run.log_evidence[k + 1],
                compute_mse(mu, &truth)?
            );
        }
    }
    Ok(())
}
