//! Phase and shift ambiguity detection on an estimate that is an exact
//! rotated and shifted copy of the true channel.
//!
//! cargo run --release --example ambiguity_detection

use std::f64::consts::PI;

use codeaided_em::ambiguity::{score_hypotheses, select_and_refine, DetectorMode, MarginRule};
use codeaided_em::experiment::{simulate_frame, RunConfig, SystemSetup};
use codeaided_em::{GaussianModel, ReceiverChain};
use num_complex::Complex64;

fn main() -> codeaided_em::Result<()> {
    let cfg = RunConfig {
        sigma_h2: 0.0,
        ..RunConfig::default()
    };
    let setup = SystemSetup::new(cfg.profile)?;
    let frame = simulate_frame(&cfg, &setup, 4)?;

    // a quarter-turn rotation combined with a one-tap circular shift
    let wrong = frame
        .taps
        .circular_shift(1)
        .scaled(Complex64::from_polar(1.0, PI / 2.0));
    let model = GaussianModel::from_taps(&setup.isi, wrong, frame.sigma2)?;
    let chain = ReceiverChain {
        isi: &setup.isi,
        code: &setup.code_trellis,
        interleaver: &frame.interleaver,
    };
    let scored = score_hypotheses(&frame.y, &model.taps, model.sigma2(), chain, DetectorMode::Joint)?;
    let best = scored
        .scores
        .iter()
        .map(|s| s.log_evidence)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("shift  phase  log-evidence - best");
    for s in &scored.scores {
        println!("{:5}  {:5}  {:18.1}", s.shift_index, s.phase_index, s.log_evidence - best);
    }

    let rule = MarginRule::new(200.0)?;
    let refined = select_and_refine(&scored.scores, &model, &rule, &setup.isi)?;
    println!(
        "selected phase {} shift {}, margin {:.1}, applied {}",
        refined.phase_index, refined.shift_index, refined.margin, refined.applied
    );
    let err: f64 = refined
        .model
        .taps
        .as_slice()
        .iter()
        .zip(frame.taps.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    println!("tap error after refinement: {err:.3e}");
    Ok(())
}
