//! Benchmark target distributions.
//!
//! Every target exposes its log density and gradient through one call,
//! [`Target::evaluate`], which counts as a single density evaluation.

mod gaussian;
mod mixture;
mod schools;

pub use gaussian::EquicorrelatedGaussian;
pub use mixture::{GaussianMixture, DEFAULT_MIXTURE_SEED};
pub use schools::EightSchools;

use crate::error::{Error, Result};

/// Log density and its gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub log_density: f64,
    pub gradient: Vec<f64>,
}

/// Mean vector and row-major covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
}

/// A differentiable log density on `R^p`.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density.
    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn reference_moments(&self) -> Option<Moments> {
        None
    }
}

/// A named density together with its evaluation counter.
///
/// One instance belongs to one chain: the counter is plain state, not
/// shared.
pub struct Target {
    name: String,
    model: Box<dyn LogDensity>,
    eval_count: u64,
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Target")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("eval_count", &self.eval_count)
            .finish()
    }
}

/// CLI names of the built-in targets.
pub const TARGET_NAMES: [&str; 4] = ["n4-pos", "n4-neg", "eight-schools", "mixture10"];

impl Target {
    pub fn new(name: impl Into<String>, model: impl LogDensity + 'static) -> Self {
        Self {
            name: name.into(),
            model: Box::new(model),
            eval_count: 0,
        }
    }

    /// Builds a built-in target from its CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "n4-pos" => make_equicorrelated_gaussian(4, 0.999).map(|t| t.renamed(name)),
            "n4-neg" => make_equicorrelated_gaussian(4, -0.3329).map(|t| t.renamed(name)),
            "eight-schools" => Ok(make_eight_schools()),
            "mixture10" => Ok(make_gaussian_mixture(DEFAULT_MIXTURE_SEED)),
            other => Err(Error::Config(format!(
                "unknown target '{other}' (expected one of {})",
                TARGET_NAMES.join(", ")
            ))),
        }
    }

    fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn reference_moments(&self) -> Option<Moments> {
        self.model.reference_moments()
    }

    pub fn model(&self) -> &dyn LogDensity {
        self.model.as_ref()
    }

    /// Log density and gradient at `x`. Increments the counter by one on
    /// success; rejects malformed input without counting it.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        let p = self.dim();
        if x.len() != p {
            return Err(Error::input(format!(
                "point has length {}, expected {p}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("point has non-finite coordinates"));
        }
        let mut gradient = vec![0.0; p];
        let log_density = self.model.log_density_and_gradient(x, &mut gradient);
        self.eval_count += 1;
        Ok(Evaluation {
            log_density,
            gradient,
        })
    }
}

/// Zero-mean Gaussian with unit variances and common correlation `rho`.
pub fn make_equicorrelated_gaussian(p: usize, rho: f64) -> Result<Target> {
    let model = EquicorrelatedGaussian::new(p, rho)?;
    Ok(Target::new(format!("equicorrelated-{p}({rho})"), model))
}

pub fn make_eight_schools() -> Target {
    Target::new("eight-schools", EightSchools::new())
}

pub fn make_gaussian_mixture(seed: u64) -> Target {
    Target::new(
        "mixture10",
        GaussianMixture::uniform_modes(10, 10, 10.0, seed),
    )
}

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;
