use rand::Rng;

use super::covariance_matching::{fill_normal, norm};
use super::slice::draw_slice_level;
use super::{SamplerConfig, State, Step, StepStats};
use crate::error::{Error, Result};
use crate::linalg::{append_orthonormal_column, project_orthogonal_unchecked, OrthonormalColumns};
use crate::targets::Target;

/// cos 60°.
const GATE_COSINE: f64 = 0.5;

/// How the zero-variance basis `J` evolves during an update.
#[derive(Debug, Clone)]
enum RankPolicy {
    /// Grow `J` along projected gradients whose angle with the full
    /// gradient has cosine above `min_cosine`.
    Adaptive { min_cosine: f64 },
    /// `J` stays as given.
    Fixed(OrthonormalColumns),
}

/// One shrinking-rank slice-sampling update.
///
/// Crumbs are spherical in the orthogonal complement of `J`; after each
/// rejected proposal the gradient, projected out of `J`, becomes a new
/// column of `J` provided it makes an angle under 60° with the full
/// gradient. The crumb scale is multiplied by `shrink_factor` after every
/// crumb.
pub fn sr_step<R: Rng + ?Sized>(
    current: &State,
    target: &mut Target,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Step> {
    crumb_walk(
        current,
        target,
        config,
        rng,
        RankPolicy::Adaptive {
            min_cosine: GATE_COSINE,
        },
    )
}

/// One update with spherical crumbs whose scale shrinks by `shrink_factor`
/// after each rejection. Same as [`sr_step`] with the basis kept empty.
pub fn na_step<R: Rng + ?Sized>(
    current: &State,
    target: &mut Target,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Step> {
    let empty = OrthonormalColumns::empty(current.x.len());
    crumb_walk(current, target, config, rng, RankPolicy::Fixed(empty))
}

fn crumb_walk<R: Rng + ?Sized>(
    current: &State,
    target: &mut Target,
    config: &SamplerConfig,
    rng: &mut R,
    policy: RankPolicy,
) -> Result<Step> {
    let p = current.x.len();
    let x0 = &current.x;
    let slice_level = draw_slice_level(current.log_density, rng);
    let (mut basis, gate) = match policy {
        RankPolicy::Adaptive { min_cosine } => (OrthonormalColumns::empty(p), Some(min_cosine)),
        RankPolicy::Fixed(j) => (j, None),
    };

    // Crumbs live in the frame centred at x0. With shrinking scales the
    // proposal is the precision-weighted crumb mean; at a constant scale
    // this is the plain average with spread σ/√k.
    let mut sigma = config.sigma_c;
    let mut weighted_sum = vec![0.0; p];
    let mut precision = 0.0;
    let mut density_evals = 0;
    let mut z = vec![0.0; p];
    let mut offset = vec![0.0; p];

    for k in 1.. {
        if k > config.max_crumbs_per_update {
            return Err(Error::CrumbLimit {
                limit: config.max_crumbs_per_update,
                x0: x0.clone(),
                slice_level,
            });
        }

        // Crumb c = σz carries weight σ⁻², so it adds z/σ to the sum.
        fill_normal(rng, &mut z);
        for (s, zi) in weighted_sum.iter_mut().zip(&z) {
            *s += zi / sigma;
        }
        precision += 1.0 / (sigma * sigma);
        let spread = precision.sqrt().recip();
        fill_normal(rng, &mut z);
        for ((o, s), zi) in offset.iter_mut().zip(&weighted_sum).zip(&z) {
            *o = s / precision + spread * zi;
        }
        let projected = project_orthogonal_unchecked(&basis, &offset);
        let proposal: Vec<f64> = x0.iter().zip(&projected).map(|(a, b)| a + b).collect();

        let eval = target.evaluate(&proposal)?;
        density_evals += 1;
        if eval.log_density >= slice_level {
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
                    basis_rank: basis.ncols(),
                },
            });
        }

        if let Some(min_cosine) = gate.filter(|_| basis.can_grow()) {
            let grad_norm = norm(&eval.gradient);
            if grad_norm >= 1e-12 && grad_norm.is_finite() {
                let g_star = project_orthogonal_unchecked(&basis, &eval.gradient);
                let g_star_norm = norm(&g_star);
                let cosine_num: f64 = g_star.iter().zip(&eval.gradient).map(|(a, b)| a * b).sum();
                if cosine_num > min_cosine * g_star_norm * grad_norm {
                    basis = append_orthonormal_column(&basis, &g_star)?;
                }
            }
        }
        sigma *= config.shrink_factor;
    }
    unreachable!("the crumb loop only exits by returning")
}
