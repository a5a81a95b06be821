use rand::Rng;

use super::covariance_matching::fill_normal;
use super::{SamplerConfig, Samples, State};
use crate::error::{Error, Result};
use crate::targets::Target;

/// Trial-run protocol for the Metropolis baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisSettings {
    /// Steps per trial run.
    pub trial_length: usize,
    /// Acceptance rates a trial must fall in to be used.
    pub acceptance_window: (f64, f64),
    /// Trial scales range over `sigma_c · 10^j` for `|j| <= max_decades`.
    pub max_decades: i32,
    /// Proposal covariance multiplier is `(covariance_scale)² / p`.
    pub covariance_scale: f64,
}

impl Default for MetropolisSettings {
    fn default() -> Self {
        Self {
            trial_length: 2000,
            acceptance_window: (0.1, 0.5),
            max_decades: 4,
            covariance_scale: 2.4,
        }
    }
}

impl MetropolisSettings {
    pub(crate) fn validate(&self) -> Result<()> {
        let (lo, hi) = self.acceptance_window;
        if self.trial_length < 2 {
            return Err(Error::Config("trial_length must be at least 2".into()));
        }
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Config(format!("bad acceptance window ({lo}, {hi})")));
        }
        if self.max_decades < 0 || !(self.covariance_scale > 0.0) {
            return Err(Error::Config("bad Metropolis trial settings".into()));
        }
        Ok(())
    }
}

/// Outcome of one trial run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub scale: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone)]
pub struct MetropolisRun {
    /// Main-chain states, one per proposal; empty if tuning failed.
    pub samples: Samples,
    pub log_densities: Vec<f64>,
    pub trials: Vec<TrialRun>,
    pub tuning_failed: bool,
    /// Whether the main chain used the trial covariance (as opposed to the
    /// spherical fallback).
    pub used_covariance: bool,
    pub proposals: u64,
    pub accepted: u64,
}

/// Random-walk proposal `x + L z`, with `L` lower-triangular (row-major).
struct Proposal {
    dim: usize,
    lower: Vec<f64>,
}

impl Proposal {
    fn spherical(dim: usize, scale: f64) -> Self {
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            lower[i * dim + i] = scale;
        }
        Self { dim, lower }
    }

    fn apply(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        let p = self.dim;
        for i in 0..p {
            let row = &self.lower[i * p..i * p + i + 1];
            out[i] = x[i] + row.iter().zip(z).map(|(l, zi)| l * zi).sum::<f64>();
        }
    }
}

/// Runs `steps` Metropolis transitions from `state`; returns the acceptance
/// count and calls `record` with every post-transition state.
fn random_walk<R: Rng + ?Sized>(
    target: &mut Target,
    state: &mut State,
    proposal: &Proposal,
    steps: usize,
    rng: &mut R,
    mut record: impl FnMut(&State),
) -> Result<u64> {
    let p = state.x.len();
    let mut z = vec![0.0; p];
    let mut candidate = vec![0.0; p];
    let mut accepted = 0;
    for _ in 0..steps {
        fill_normal(rng, &mut z);
        proposal.apply(&state.x, &z, &mut candidate);
        let log_density = target.evaluate(&candidate)?.log_density;
        // Accept with probability min{1, f(x')/f(x)}.
        let log_u = (1.0 - rng.random::<f64>()).ln();
        if log_u <= log_density - state.log_density {
            state.x.copy_from_slice(&candidate);
            state.log_density = log_density;
            accepted += 1;
        }
        record(state);
    }
    Ok(accepted)
}

/// Metropolis sampler whose proposal comes from trial runs.
///
/// Trial runs use spherical proposals at `sigma_c · 10^j`, starting at
/// `j = 0` and moving towards larger steps when the acceptance rate is
/// above the window, smaller when below, until a trial lands inside the
/// window or `|j|` exceeds `max_decades`. The sample covariance of the
/// successful trial, scaled by `2.4²/p`, shapes the main chain's proposal;
/// if it is not positive definite, the trial's spherical scale is reused.
/// If no trial qualifies, the run is flagged and no samples are drawn.
pub fn metropolis_trials_run<R: Rng + ?Sized>(
    target: &mut Target,
    config: &SamplerConfig,
    rng: &mut R,
    n: usize,
) -> Result<MetropolisRun> {
    config.validate()?;
    let settings = &config.metropolis;
    let p = target.dim();
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut state = State::at(target, x0)?;
    let (lo, hi) = settings.acceptance_window;

    let mut trials = Vec::new();
    let mut proposals = 0;
    let mut chosen: Option<(f64, Vec<f64>)> = None;
    let mut decade = 0i32;
    let mut direction = 0i32;
    while decade.abs() <= settings.max_decades {
        let scale = config.sigma_c * 10f64.powi(decade);
        let mut history = Vec::with_capacity(settings.trial_length * p);
        let accepted = random_walk(
            target,
            &mut state,
            &Proposal::spherical(p, scale),
            settings.trial_length,
            rng,
            |s| history.extend_from_slice(&s.x),
        )?;
        proposals += settings.trial_length as u64;
        let rate = accepted as f64 / settings.trial_length as f64;
        trials.push(TrialRun {
            scale,
            acceptance_rate: rate,
        });
        if (lo..=hi).contains(&rate) {
            chosen = Some((scale, history));
            break;
        }
        let wanted = if rate > hi { 1 } else { -1 };
        if direction != 0 && wanted != direction {
            // Stepped over the window between two adjacent decades.
            break;
        }
        direction = wanted;
        decade += direction;
    }

    let Some((scale, history)) = chosen else {
        return Ok(MetropolisRun {
            samples: Samples::new(p),
            log_densities: Vec::new(),
            trials,
            tuning_failed: true,
            used_covariance: false,
            proposals,
            accepted: 0,
        });
    };

    let factor = settings.covariance_scale / (p as f64).sqrt();
    let (proposal, used_covariance) =
        match sample_covariance(&history, p).and_then(|cov| cholesky_lower(&cov, p)) {
            Some(mut lower) => {
                lower.iter_mut().for_each(|v| *v *= factor);
                (Proposal { dim: p, lower }, true)
            }
            None => (Proposal::spherical(p, scale), false),
        };

    let mut samples = Samples::with_capacity(p, n);
    let mut log_densities = Vec::with_capacity(n);
    let accepted = random_walk(target, &mut state, &proposal, n, rng, |s| {
        samples.push(&s.x);
        log_densities.push(s.log_density);
    })?;
    Ok(MetropolisRun {
        samples,
        log_densities,
        trials,
        tuning_failed: false,
        used_covariance,
        proposals: proposals + n as u64,
        accepted,
    })
}

fn sample_covariance(rows: &[f64], p: usize) -> Option<Vec<f64>> {
    let n = rows.len() / p;
    if n < 2 {
        return None;
    }
    let mut mean = vec![0.0; p];
    for row in rows.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; p * p];
    for row in rows.chunks_exact(p) {
        for i in 0..p {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[i * p + j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = cov[i * p + j] / (n as f64 - 1.0);
            cov[i * p + j] = v;
            cov[j * p + i] = v;
        }
    }
    Some(cov)
}

/// Lower Cholesky factor, or `None` if `a` is not numerically positive
/// definite.
fn cholesky_lower(a: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let d = a[j * p + j] - (0..j).map(|k| l[j * p + k] * l[j * p + k]).sum::<f64>();
        if !(d > 1e-14 * a[j * p + j].abs()) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[j * p + j] = ljj;
        for i in (j + 1)..p {
            let s = a[i * p + j] - (0..j).map(|k| l[i * p + k] * l[j * p + k]).sum::<f64>();
            l[i * p + j] = s / ljj;
        }
    }
    Some(l)
}
