//! A small Monte Carlo comparison of the conventional and detection-aided
//! receivers, with CSV and summary output.
//!
//! cargo run --release --example monte_carlo [out_dir]

use std::path::PathBuf;

use codeaided_em::ambiguity::DetectorMode;
use codeaided_em::experiment::{emit_results, run_experiment, OutputPaths, RunConfig};

fn main() -> codeaided_em::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let base = RunConfig {
        sigma_h2: 1.0,
        n_trials: 24,
        info_bits: 1000,
        margin_threshold: 100.0,
        ..RunConfig::default()
    };
    for detector in [DetectorMode::Off, DetectorMode::Phase, DetectorMode::Joint] {
        let cfg = RunConfig {
            detector,
            ..base.clone()
        };
        let exp = run_experiment(&cfg)?;
        let s = &exp.summary;
        let last = s.mse_median.len() - 1;
        println!(
            "{detector:>5}: FR {:5.1}%  refined {:5.1}%  median MSE {:.2e}  mean MSE {:.2e}  BER {:.2e}",
            100.0 * s.failure_rate,
            100.0 * s.refinement_rate,
            s.mse_median[last],
            s.mse_mean[last],
            s.bit_error_rate
        );
        if let Some(dir) = &out_dir {
            let paths = OutputPaths {
                csv: Some(dir.join(format!("trials_{detector}.csv"))),
                summary: Some(dir.join(format!("summary_{detector}.txt"))),
            };
            emit_results(&exp.records, s, &paths)?;
        }
    }
    Ok(())
}
