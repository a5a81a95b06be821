use rand::Rng;
use rand_distr::StandardNormal;

use super::slice::{
    conditional_variance, crumb_precision_update, draw_slice_level, fit_kappa, parabola_peak,
};
use super::{SamplerConfig, State, Step, StepStats};
use crate::error::{Error, Result};
use crate::linalg::{solve_upper_transpose_unchecked, solve_upper_unchecked, TriangularFactor};
use crate::targets::Target;

/// One crumb and the proposal drawn from it.
#[derive(Debug)]
pub struct CrumbEvent<'a> {
    /// 1-based crumb index within the update.
    pub index: usize,
    pub crumb: &'a [f64],
    /// Factor `F` of the precision the crumb was drawn with.
    pub crumb_factor: &'a TriangularFactor,
    /// Factor `R` of the proposal precision `Λ`.
    pub proposal_factor: &'a TriangularFactor,
    /// Proposal mean `c̄`.
    pub proposal_mean: &'a [f64],
    pub proposal: &'a [f64],
    pub log_density: f64,
    pub slice_level: f64,
    pub accepted: bool,
}

/// The crumb distribution change after a rejected proposal.
#[derive(Debug)]
pub struct AdaptationEvent<'a> {
    pub index: usize,
    /// Unit gradient at the rejected proposal; `None` if the gradient
    /// vanished.
    pub direction: Option<&'a [f64]>,
    /// Fitted curvature, when one was computed.
    pub kappa: Option<f64>,
    /// Target conditional variance; `None` when the fit was unusable and
    /// the update fell back to pure rescaling.
    pub sigma_sq: Option<f64>,
    pub alpha: f64,
    pub mode_estimate: f64,
    pub next_crumb_factor: &'a TriangularFactor,
    pub next_proposal_factor: &'a TriangularFactor,
}

/// Hook into the inner loop of [`cm_step`]. Both methods default to no-ops.
pub trait CrumbObserver {
    fn on_crumb(&mut self, _event: &CrumbEvent<'_>) {}
    fn on_adaptation(&mut self, _event: &AdaptationEvent<'_>) {}
}

impl CrumbObserver for () {}

/// One covariance-matching slice-sampling update from `current`.
///
/// Crumbs and proposals are drawn through upper-triangular factors of the
/// crumb precision `W` and the proposal precision `Λ`, so each draw is
/// `O(p²)`. After a rejection the next crumb precision is
/// `θΛ + αggᵀ`, with `α` chosen so the proposal's variance along the unit
/// gradient `g` matches the slice's estimated width there.
pub fn cm_step<R, O>(
    current: &State,
    target: &mut Target,
    config: &SamplerConfig,
    rng: &mut R,
    observer: &mut O,
) -> Result<Step>
where
    R: Rng + ?Sized,
    O: CrumbObserver + ?Sized,
{
    let p = current.x.len();
    let x0 = &current.x;
    let theta = config.theta;
    let sqrt_theta = theta.sqrt();
    let sqrt_one_theta = (1.0 + theta).sqrt();

    let mut mode_estimate = current.log_density;
    let slice_level = draw_slice_level(current.log_density, rng);
    let mut proposal_factor = TriangularFactor::scaled_identity(p, 1.0 / config.sigma_c)?;
    let mut crumb_factor = proposal_factor.clone();
    let mut weighted_crumb_sum = vec![0.0; p];
    let mut density_evals = 0;

    let mut z = vec![0.0; p];
    for k in 1.. {
        if k > config.max_crumbs_per_update {
            return Err(Error::CrumbLimit {
                limit: config.max_crumbs_per_update,
                x0: x0.clone(),
                slice_level,
            });
        }

        fill_normal(rng, &mut z);
        let step = solve_upper_unchecked(&crumb_factor, &z);
        let crumb: Vec<f64> = x0.iter().zip(&step).map(|(a, b)| a + b).collect();
        // The running sum of Wᵢcᵢ is kept relative to x₀, where
        // Wᵢ(cᵢ − x₀) = Fᵢᵀzᵢ exactly. Summing absolute positions instead
        // cancels catastrophically once Λ is badly conditioned.
        let w_offset = crumb_factor.mul_transpose_vec(&z);
        for (s, v) in weighted_crumb_sum.iter_mut().zip(&w_offset) {
            *s += v;
        }
        let shift = solve_upper_unchecked(
            &proposal_factor,
            &solve_upper_transpose_unchecked(&proposal_factor, &weighted_crumb_sum),
        );
        let mean: Vec<f64> = x0.iter().zip(&shift).map(|(a, b)| a + b).collect();
        fill_normal(rng, &mut z);
        let offset = solve_upper_unchecked(&proposal_factor, &z);
        let proposal: Vec<f64> = mean.iter().zip(&offset).map(|(a, b)| a + b).collect();

        let eval = target.evaluate(&proposal)?;
        density_evals += 1;
        let accepted = eval.log_density >= slice_level;
        observer.on_crumb(&CrumbEvent {
            index: k,
            crumb: &crumb,
            crumb_factor: &crumb_factor,
            proposal_factor: &proposal_factor,
            proposal_mean: &mean,
            proposal: &proposal,
            log_density: eval.log_density,
            slice_level,
            accepted,
        });
        if accepted {
            return Ok(Step {
                state: State {
                    x: proposal,
                    log_density: eval.log_density,
                },
                stats: StepStats {
                    crumbs_drawn: k,
                    density_evals,
                    accepted_proposal_index: k,
                    slice_level,
                    basis_rank: 0,
                },
            });
        }

        // Adapt the next crumb's precision.
        let grad_norm = norm(&eval.gradient);
        let mut direction = None;
        let mut kappa = None;
        let mut sigma_sq = None;
        let mut update = None;
        if grad_norm >= 1e-12 && grad_norm.is_finite() {
            let g: Vec<f64> = eval.gradient.iter().map(|v| v / grad_norm).collect();
            let mut delta = norm_diff(&proposal, &crumb);
            if !(delta > 0.0) {
                delta = 1e-8 * config.sigma_c;
            }
            let logf_u = if config.approximate_u {
                slice_level
            } else {
                let u: Vec<f64> = proposal
                    .iter()
                    .zip(&g)
                    .map(|(x, gi)| x + delta * gi)
                    .collect();
                density_evals += 1;
                target.evaluate(&u)?.log_density
            };
            let k_fit = fit_kappa(eval.log_density, grad_norm, logf_u, delta)?;
            kappa = Some(k_fit);
            if let Ok(peak) = parabola_peak(eval.log_density, grad_norm, k_fit) {
                if peak.is_finite() {
                    mode_estimate = mode_estimate.max(peak);
                }
                let var = conditional_variance(mode_estimate, slice_level, k_fit)?;
                if var > 0.0 && var.is_finite() {
                    sigma_sq = Some(var);
                    update = Some(crumb_precision_update(&proposal_factor, &g, var, theta)?);
                }
            }
            direction = Some(g);
        }

        // Without a usable fit, α = 0: both factors are rescaled copies of R.
        let alpha = match update {
            Some(up) => {
                crumb_factor = up.crumb_factor;
                proposal_factor = up.proposal_factor;
                up.alpha
            }
            None => {
                crumb_factor = proposal_factor.scaled(sqrt_theta)?;
                proposal_factor = proposal_factor.scaled(sqrt_one_theta)?;
                0.0
            }
        };
        observer.on_adaptation(&AdaptationEvent {
            index: k,
            direction: direction.as_deref(),
            kappa,
            sigma_sq,
            alpha,
            mode_estimate,
            next_crumb_factor: &crumb_factor,
            next_proposal_factor: &proposal_factor,
        });
    }
    unreachable!("the crumb loop only exits by returning")
}

pub(super) fn fill_normal<R: Rng + ?Sized>(rng: &mut R, z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

pub(super) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
