//! Joint EM estimation and turbo equalization of one coded frame.
//!
//! cargo run --release --example turbo_receiver

use codeaided_em::experiment::{compute_mse, receive, simulate_frame, RunConfig, SystemSetup};

fn main() -> codeaided_em::Result<()> {
    let cfg = RunConfig {
        sigma_h2: 0.1,
        ..RunConfig::default()
    };
    let setup = SystemSetup::new(cfg.profile)?;
    let frame = simulate_frame(&cfg, &setup, 1)?;
    let out = receive(&cfg, &setup, &frame)?;
    let truth = frame.truth_means(&setup)?;

    println!(
        "{} info bits, {} symbols, sigma2 = {:.4}",
        frame.info_bits.len(),
        frame.y.len(),
        frame.sigma2
    );
    println!("turbo  decoder log-evidence  MSE after EM");
    for (k, ev) in out.decoder_log_evidence.iter().enumerate() {
        let last = (k + 1) * cfg.n_em_per_turbo - 1;
        println!(
            "{:5}  {:21.2}  {:.3e}",
            k + 1,
            ev,
            compute_mse(&out.means_trajectory[last], &truth)?
        );
    }
    let errors = out
        .info_decisions
        .iter()
        .zip(&frame.info_bits)
        .filter(|(a, b)| a != b)
        .count();
    println!("information bit errors: {errors}");
    println!(
        "branch updates: equalizer {}, decoder {}",
        out.ops.em_branch_updates, out.ops.decoder_branch_updates
    );
    Ok(())
}
