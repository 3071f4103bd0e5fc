use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use codeaided_em::ambiguity::DetectorMode;
use codeaided_em::channel::ChannelProfile;
use codeaided_em::experiment::{
    self, emit_results, fmt_num, receive, record_trial, run_experiment, run_sweep, simulate_frame,
    sweep_to_csv, write_text, MseNormalization, OutputPaths, RunConfig, SystemSetup,
};

#[derive(Parser)]
#[command(name = "cem", version, about = "Code-aided EM channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full Monte Carlo experiment.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Per-trial CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Key-value summary output; printed to stdout when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// One seeded trial with a per-iteration dump.
    Trial {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        trial_id: u64,
    },
    /// Failure rate over a grid of initialization variances.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
        sigma_h2_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "off,phase,joint")]
        detectors: Vec<DetectorMode>,
        /// Sweep CSV output; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Channel profile: L2, L3 or L4.
    #[arg(long, default_value = "L3")]
    profile: ChannelProfile,
    #[arg(long, default_value_t = 6.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_h2: f64,
    #[arg(long, default_value_t = 2000)]
    info_bits: usize,
    #[arg(long, default_value_t = 200)]
    n_trials: usize,
    #[arg(long, default_value_t = 7)]
    n_turbo: usize,
    #[arg(long, default_value_t = 5)]
    n_em_per_turbo: usize,
    /// off, phase or joint.
    #[arg(long, default_value = "off")]
    detector: DetectorMode,
    #[arg(long, default_value_t = 1e3)]
    margin_threshold: f64,
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    /// mean or tap.
    #[arg(long, default_value = "mean")]
    mse_normalization: MseNormalization,
    /// Worker threads (overrides CEM_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

impl From<ConfigArgs> for RunConfig {
    fn from(a: ConfigArgs) -> Self {
        RunConfig {
            profile: a.profile,
            snr_db: a.snr_db,
            sigma_h2: a.sigma_h2,
            info_bits: a.info_bits,
            n_trials: a.n_trials,
            n_turbo: a.n_turbo,
            n_em_per_turbo: a.n_em_per_turbo,
            detector: a.detector,
            margin_threshold: a.margin_threshold,
            base_seed: a.base_seed,
            mse_normalization: a.mse_normalization,
            threads: a.threads,
        }
    }
}

fn trial_dump(config: &RunConfig, trial: u64) -> codeaided_em::Result<String> {
    config.validate()?;
    let setup = SystemSetup::new(config.profile)?;
    let frame = simulate_frame(config, &setup, trial)?;
    let outcome = receive(config, &setup, &frame)?;
    let rec = record_trial(config, &setup, &frame, &outcome, trial)?;
    let mut out = String::from("em_iter,mse\n");
    for (k, m) in rec.mse_per_em_iteration.iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, fmt_num(*m)));
    }
    out.push_str(&format!("final_mse = {}\n", fmt_num(rec.final_mse)));
    out.push_str(&format!("failed = {}\n", rec.failed));
    out.push_str(&format!("info_bit_errors = {}\n", rec.info_bit_error_count));
    if let Some(d) = &outcome.detection {
        out.push_str(&format!(
            "detection = phase {} shift {} margin {} applied {}\n",
            d.phase_index,
            d.shift_index,
            fmt_num(d.margin),
            d.applied
        ));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run {
            config,
            csv,
            summary,
        } => {
            let config = RunConfig::from(config);
            run_experiment(&config).and_then(|exp| {
                let paths = OutputPaths {
                    csv,
                    summary: summary.clone(),
                };
                emit_results(&exp.records, &exp.summary, &paths)?;
                if summary.is_none() {
                    print!("{}", experiment::summary_to_text(&exp.summary));
                }
                Ok(())
            })
        }
        Command::Trial { config, trial_id } => {
            trial_dump(&config.into(), trial_id).map(|s| print!("{s}"))
        }
        Command::Sweep {
            config,
            sigma_h2_grid,
            detectors,
            out,
        } => {
            let config = RunConfig::from(config);
            run_sweep(&config, &sigma_h2_grid, &detectors).and_then(|points| {
                let text = sweep_to_csv(config.profile, &points);
                match out {
                    Some(p) => write_text(&p, &text),
                    None => {
                        print!("{text}");
                        Ok(())
                    }
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
