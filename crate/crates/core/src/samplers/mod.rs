//! Markov transition kernels and the chain runner.
//!
//! Three of the kernels are Gaussian-crumb slice samplers: each update draws
//! a slice level below the current log density, then alternates crumb and
//! proposal draws until a proposal lands inside the slice. They differ only
//! in how the crumb distribution adapts after a rejection:
//!
//! * [`cm_step`] matches the proposal's conditional variance along the
//!   gradient to an estimate of the slice's extent in that direction.
//! * [`sr_step`] removes the gradient direction from the crumb covariance.
//! * [`na_step`] never adapts, only shrinks the crumb scale.
//!
//! The fourth kernel, [`metropolis_trials_run`], is a random-walk
//! Metropolis sampler that picks its proposal from short trial runs.

mod covariance_matching;
mod metropolis;
mod shrinking_rank;
pub mod slice;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use covariance_matching::{cm_step, AdaptationEvent, CrumbEvent, CrumbObserver};
pub use metropolis::{metropolis_trials_run, MetropolisRun, MetropolisSettings, TrialRun};
pub use shrinking_rank::{na_step, sr_step};
pub use slice::{
    conditional_variance, crumb_precision_update, draw_slice_level, fit_kappa, parabola_peak,
    slice_level, PrecisionUpdate,
};

use crate::error::{Error, Result};
use crate::targets::Target;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    CovarianceMatching,
    ShrinkingRank,
    NonadaptiveCrumb,
    MetropolisTrials,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::CovarianceMatching,
        Method::ShrinkingRank,
        Method::NonadaptiveCrumb,
        Method::MetropolisTrials,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CovarianceMatching => "covariance-matching",
            Method::ShrinkingRank => "shrinking-rank",
            Method::NonadaptiveCrumb => "nonadaptive-crumb",
            Method::MetropolisTrials => "metropolis-trials",
        }
    }

    pub fn is_slice_sampler(self) -> bool {
        self != Method::MetropolisTrials
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "covariance-matching" | "cm" => Ok(Method::CovarianceMatching),
            "shrinking-rank" | "sr" => Ok(Method::ShrinkingRank),
            "nonadaptive-crumb" | "nonadaptive" | "non-adaptive" | "na" => {
                Ok(Method::NonadaptiveCrumb)
            }
            "metropolis-trials" | "metropolis" | "mt" => Ok(Method::MetropolisTrials),
            _ => Err(Error::Config(format!(
                "unknown method '{s}' (expected one of {})",
                Method::ALL.map(Method::as_str).join(", ")
            ))),
        }
    }
}

/// Sampler choice plus its tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub method: Method,
    /// Initial crumb standard deviation, or the first trial proposal scale
    /// for Metropolis.
    pub sigma_c: f64,
    /// Growth rate of the overall crumb precision (covariance matching).
    pub theta: f64,
    /// Per-crumb scale factor for shrinking-rank and non-adaptive crumbs.
    pub shrink_factor: f64,
    /// Replace `log f(u)` with the slice level in the curvature fit.
    pub approximate_u: bool,
    pub max_crumbs_per_update: usize,
    pub metropolis: MetropolisSettings,
    /// Starting point; the origin when `None`.
    pub x0: Option<Vec<f64>>,
}

impl SamplerConfig {
    pub fn new(method: Method, sigma_c: f64) -> Self {
        Self {
            method,
            sigma_c,
            theta: 1.0,
            shrink_factor: 0.9,
            approximate_u: false,
            max_crumbs_per_update: 10_000,
            metropolis: MetropolisSettings::default(),
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_c.is_finite() && self.sigma_c > 0.0) {
            return Err(Error::Config(format!(
                "sigma_c must be positive, got {}",
                self.sigma_c
            )));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::Config(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor <= 1.0) {
            return Err(Error::Config(format!(
                "shrink factor must lie in (0, 1], got {}",
                self.shrink_factor
            )));
        }
        if self.max_crumbs_per_update == 0 {
            return Err(Error::Config(
                "max_crumbs_per_update must be positive".into(),
            ));
        }
        self.metropolis.validate()
    }
}

/// Current point of a chain and its log density.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub log_density: f64,
}

impl State {
    /// Evaluates the target at `x` (one counted evaluation).
    pub fn at(target: &mut Target, x: Vec<f64>) -> Result<Self> {
        let log_density = target.evaluate(&x)?.log_density;
        if !log_density.is_finite() {
            return Err(Error::input(format!(
                "log density at the starting point is {log_density}"
            )));
        }
        Ok(Self { x, log_density })
    }
}

/// Per-update counters for the slice samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub crumbs_drawn: usize,
    pub density_evals: usize,
    /// 1-based index of the accepted proposal; equals `crumbs_drawn`.
    pub accepted_proposal_index: usize,
    /// The update's log slice level `ỹ₀`.
    pub slice_level: f64,
    /// Columns of the zero-variance basis when the update ended
    /// (shrinking-rank only).
    pub basis_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub stats: StepStats,
}

/// Row-major `N × p` sample matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    /// Panics if `data.len()` is not a multiple of `dim`.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "ragged sample matrix");
        Self { dim, data }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainStatus {
    Complete,
    /// Metropolis found no trial scale with an acceptable acceptance rate.
    TuningFailed,
    /// An update hit the crumb cap; samples hold the updates before it.
    CrumbLimit {
        update: usize,
        limit: usize,
    },
}

impl ChainStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, ChainStatus::Complete)
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub target: String,
    pub config: SamplerConfig,
    pub seed: u64,
    pub samples: Samples,
    /// Log density of each sample row.
    pub log_densities: Vec<f64>,
    /// Slice level of the update that produced each row (slice samplers
    /// only; empty for Metropolis).
    pub slice_levels: Vec<f64>,
    pub total_density_evals: u64,
    pub total_crumbs: u64,
    pub total_proposals: u64,
    pub wall_seconds: f64,
    pub status: ChainStatus,
    pub trials: Vec<TrialRun>,
}

/// Draws `n` samples with the configured kernel from a generator seeded by
/// `seed`. Deterministic in `(config, target, n, seed)`.
///
/// The counters cover every evaluation made on `target` during the call,
/// including the one at the starting point.
pub fn run_chain(
    config: &SamplerConfig,
    target: &mut Target,
    n: usize,
    seed: u64,
) -> Result<ChainResult> {
    config.validate()?;
    if n == 0 {
        return Err(Error::Config("chain length must be at least 1".into()));
    }
    let p = target.dim();
    if let Some(x0) = &config.x0 {
        if x0.len() != p {
            return Err(Error::Config(format!(
                "starting point has {} coordinates, target '{}' has {p}",
                x0.len(),
                target.name()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let evals_before = target.eval_count();
    let started = Instant::now();

    let mut result = ChainResult {
        target: target.name().to_string(),
        config: config.clone(),
        seed,
        samples: Samples::new(p),
        log_densities: Vec::new(),
        slice_levels: Vec::new(),
        total_density_evals: 0,
        total_crumbs: 0,
        total_proposals: 0,
        wall_seconds: 0.0,
        status: ChainStatus::Complete,
        trials: Vec::new(),
    };

    if config.method == Method::MetropolisTrials {
        let run = metropolis_trials_run(target, config, &mut rng, n)?;
        result.status = if run.tuning_failed {
            ChainStatus::TuningFailed
        } else {
            ChainStatus::Complete
        };
        result.samples = run.samples;
        result.log_densities = run.log_densities;
        result.total_proposals = run.proposals;
        result.trials = run.trials;
    } else {
        let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; p]);
        let mut state = State::at(target, x0)?;
        let mut samples = Samples::with_capacity(p, n);
        let mut log_densities = Vec::with_capacity(n);
        let mut slice_levels = Vec::with_capacity(n);
        for update in 0..n {
            let step = match config.method {
                Method::CovarianceMatching => cm_step(&state, target, config, &mut rng, &mut ()),
                Method::ShrinkingRank => sr_step(&state, target, config, &mut rng),
                Method::NonadaptiveCrumb => na_step(&state, target, config, &mut rng),
                Method::MetropolisTrials => unreachable!(),
            };
            let step = match step {
                Ok(step) => step,
                Err(Error::CrumbLimit { limit, .. }) => {
                    result.total_crumbs += limit as u64;
                    result.total_proposals += limit as u64;
                    result.status = ChainStatus::CrumbLimit { update, limit };
                    break;
                }
                Err(e) => return Err(e),
            };
            result.total_crumbs += step.stats.crumbs_drawn as u64;
            result.total_proposals += step.stats.crumbs_drawn as u64;
            samples.push(&step.state.x);
            log_densities.push(step.state.log_density);
            slice_levels.push(step.stats.slice_level);
            state = step.state;
        }
        result.samples = samples;
        result.log_densities = log_densities;
        result.slice_levels = slice_levels;
    }

    result.wall_seconds = started.elapsed().as_secs_f64();
    result.total_density_evals = target.eval_count() - evals_before;
    Ok(result)
}
