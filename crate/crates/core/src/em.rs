//! EM estimation of the Gaussian means of the ISI mixture.
//!
//! The E-step runs forward-backward on the channel trellis, the M-step takes
//! responsibility-weighted averages of the received samples, and the linear
//! projection maps the averages back onto `μ = D·h`. The noise variance is
//! known and never re-estimated.

use num_complex::Complex64;

use crate::channel::ChannelTaps;
use crate::error::{check_len, Error, Result};
use crate::fb::{isi_branch_metrics, run_forward_backward, Boundary, FbResult};
use crate::message::SymbolMessage;
use crate::trellis::IsiTrellis;

/// Components whose total responsibility falls below `RESPONSIBILITY_FLOOR · T`
/// keep their previous mean.
pub const RESPONSIBILITY_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel {
    pub means: Vec<Complex64>,
    pub taps: ChannelTaps,
    sigma2: f64,
    pub iteration: usize,
}

impl GaussianModel {
    /// Model with `μ = D·taps`.
    pub fn from_taps(tr: &IsiTrellis, taps: ChannelTaps, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("noise variance {sigma2} must be positive")));
        }
        Ok(Self {
            means: tr.means_from_taps(&taps)?,
            taps,
            sigma2,
            iteration: 0,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Largest `|μ_l − (D·taps)_l|`.
    pub fn constraint_residual(&self, tr: &IsiTrellis) -> f64 {
        tr.means_from_taps(&self.taps)
            .map(|mu| {
                mu.iter()
                    .zip(&self.means)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(f64::INFINITY)
    }
}

/// Edge responsibilities `p(δ_t = l | y, Θ)`.
pub fn e_step(
    y: &[Complex64],
    model: &GaussianModel,
    symbol_priors: &SymbolMessage,
    tr: &IsiTrellis,
) -> Result<FbResult> {
    let bm = isi_branch_metrics(y, &model.means, model.sigma2, symbol_priors, tr)?;
    run_forward_backward(&bm, tr, Boundary::Free, Boundary::Free)
}

/// `μ̃_l = Σ_t r_t(l)·y_t / Σ_t r_t(l)`, falling back to `previous[l]` when the
/// component's mass is below the floor.
pub fn m_step_unconstrained(
    fb: &FbResult,
    y: &[Complex64],
    previous: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len("observations vs E-step length", fb.steps(), y.len())?;
    check_len("previous means", fb.num_edges(), previous.len())?;
    let e_count = fb.num_edges();
    let mut num = vec![Complex64::new(0.0, 0.0); e_count];
    let mut den = vec![0.0f64; e_count];
    for (t, &yt) in y.iter().enumerate() {
        for (l, &lp) in fb.edge_posteriors(t).iter().enumerate() {
            let r = lp.exp();
            num[l] += r * yt;
            den[l] += r;
        }
    }
    let floor = RESPONSIBILITY_FLOOR * y.len() as f64;
    Ok(num
        .into_iter()
        .zip(den)
        .zip(previous)
        .map(|((n, d), &prev)| if d < floor { prev } else { n / d })
        .collect())
}

/// Least-squares projection onto the channel model:
/// `ĥ = (DᴴD)⁻¹Dᴴμ̃`, `μ̂ = D·ĥ`.
pub fn project_linear(
    unconstrained: &[Complex64],
    tr: &IsiTrellis,
) -> Result<(ChannelTaps, Vec<Complex64>)> {
    let taps = tr.taps_from_means(unconstrained)?;
    let means = tr.means_from_taps(&taps)?;
    Ok((taps, means))
}

/// Whether M-step outputs are projected onto `μ = D·h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Projection {
    #[default]
    Linear,
    /// Free mixture means; taps are still fitted for reporting.
    None,
}

#[derive(Clone, Debug)]
pub struct EmRun {
    pub model: GaussianModel,
    /// Means after each M-step.
    pub trajectory: Vec<Vec<Complex64>>,
    /// `log p(y | Θ^(n))` for `n = 0..=n_iters`.
    pub log_evidence: Vec<f64>,
    /// Forward-backward under the final model, for the turbo exchange.
    pub final_fb: FbResult,
    /// Branch updates spent across all E-steps (including the final pass).
    pub branch_updates: u64,
}

/// `n_iters` EM iterations followed by one forward-backward pass with the
/// final parameters. The symbol priors stay fixed throughout.
pub fn run_em(
    y: &[Complex64],
    init: GaussianModel,
    symbol_priors: &SymbolMessage,
    n_iters: usize,
    tr: &IsiTrellis,
    projection: Projection,
) -> Result<EmRun> {
    if n_iters == 0 {
        return Err(Error::InvalidConfig("EM needs at least one iteration".into()));
    }
    let mut model = init;
    let mut trajectory = Vec::with_capacity(n_iters);
    let mut log_evidence = Vec::with_capacity(n_iters + 1);
    let mut branch_updates = 0;
    for _ in 0..n_iters {
        let fb = e_step(y, &model, symbol_priors, tr)?;
        branch_updates += fb.branch_updates();
        log_evidence.push(fb.log_evidence());
        let raw = m_step_unconstrained(&fb, y, &model.means)?;
        match projection {
            Projection::Linear => {
                let (taps, means) = project_linear(&raw, tr)?;
                model.taps = taps;
                model.means = means;
            }
            Projection::None => {
                model.taps = tr.taps_from_means(&raw)?;
                model.means = raw;
            }
        }
        model.iteration += 1;
        trajectory.push(model.means.clone());
    }
    let final_fb = e_step(y, &model, symbol_priors, tr)?;
    branch_updates += final_fb.branch_updates();
    log_evidence.push(final_fb.log_evidence());
    Ok(EmRun {
        model,
        trajectory,
        log_evidence,
        final_fb,
        branch_updates,
    })
}
