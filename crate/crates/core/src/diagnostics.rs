//! Correlation length, effective sample size and the per-chain figures of
//! merit.
//!
//! Each coordinate is modelled as an AR(1) process
//! `Xₜ = E(Xₜ) + π·Xₜ₋₁ + aₜ`. Its correlation length
//! `τ = var(a)/(var(X)(1 − π)²)` becomes `(1 + π)/(1 − π)` once
//! `var(a) = var(X)(1 − π²)` is substituted. A chain's correlation length is
//! the largest over its coordinates.

use crate::error::{Error, Result};
use crate::samplers::{ChainResult, Samples};

/// Upper clamp on the lag-1 autocorrelation.
pub const MAX_PI: f64 = 1.0 - 1e-6;
/// Below this effective sample size a figure is flagged unreliable.
pub const MIN_RELIABLE_ESS: f64 = 4.0;
/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Fit {
    pub tau: f64,
    /// Clamped lag-1 autocorrelation used for `tau`.
    pub pi_hat: f64,
    /// The autocorrelation before clamping.
    pub raw_pi: f64,
}

impl Ar1Fit {
    pub fn clamped(&self) -> bool {
        self.pi_hat != self.raw_pi
    }
}

/// Correlation length of `π`: `(1 + π)/(1 − π)`.
#[inline]
pub fn tau_from_pi(pi: f64) -> f64 {
    (1.0 + pi) / (1.0 - pi)
}

/// Fits the AR(1) coefficient of `series` and returns its correlation length.
pub fn ar1_tau(series: &[f64]) -> Result<Ar1Fit> {
    let n = series.len();
    if n < 10 {
        return Err(Error::input(format!(
            "series of length {n} is too short (need 10)"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("series has non-finite values"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    let mut prev = series[0] - mean;
    c0 += prev * prev;
    for v in &series[1..] {
        let d = v - mean;
        c0 += d * d;
        c1 += d * prev;
        prev = d;
    }
    if !(c0 > 0.0) {
        return Err(Error::DegenerateSeries { coordinate: None });
    }
    let raw_pi = c1 / c0;
    let pi_hat = raw_pi.clamp(0.0, MAX_PI);
    Ok(Ar1Fit {
        tau: tau_from_pi(pi_hat).max(1.0),
        pi_hat,
        raw_pi,
    })
}

/// Largest per-coordinate fit; ties keep the lowest coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainTau {
    pub fit: Ar1Fit,
    pub coordinate: usize,
}

pub fn chain_tau(samples: &Samples) -> Result<ChainTau> {
    if samples.len() < 10 {
        return Err(Error::input(format!(
            "chain of length {} is too short (need 10)",
            samples.len()
        )));
    }
    let mut best: Option<ChainTau> = None;
    for j in 0..samples.dim() {
        let fit = ar1_tau(&samples.column(j)).map_err(|e| match e {
            Error::DegenerateSeries { .. } => Error::DegenerateSeries {
                coordinate: Some(j),
            },
            other => other,
        })?;
        if best.is_none_or(|b| fit.tau > b.fit.tau) {
            best = Some(ChainTau { fit, coordinate: j });
        }
    }
    best.ok_or_else(|| Error::input("sample matrix has no columns"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOfMerit {
    pub n: usize,
    pub tau: f64,
    pub pi_hat: f64,
    pub ess: f64,
    pub evals_per_indep: f64,
    pub seconds_per_indep: f64,
    /// Nominal 95% bounds on `evals_per_indep`; `None` when unreliable.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub reliable: bool,
    /// The autocorrelation estimate was clamped.
    pub clamped: bool,
}

/// Figures of merit from a correlation-length fit and the chain's costs.
///
/// The interval comes from the AR(1) standard error
/// `se(π̂) = √((1 − π̂²)/N)` carried through `τ(π̂)` by the delta method.
pub fn figures_from_fit(
    fit: &Ar1Fit,
    n: usize,
    total_density_evals: u64,
    wall_seconds: f64,
) -> FigureOfMerit {
    let nf = n as f64;
    let tau = fit.tau;
    let ess = nf / tau;
    let evals_per_sample = total_density_evals as f64 / nf;
    let reliable = ess >= MIN_RELIABLE_ESS;
    let (ci_low, ci_high) = if reliable {
        let pi = fit.pi_hat;
        let se_pi = ((1.0 - pi * pi) / nf).sqrt();
        let se_tau = 2.0 / ((1.0 - pi) * (1.0 - pi)) * se_pi;
        let lo = (tau - Z_95 * se_tau).max(1.0);
        let hi = tau + Z_95 * se_tau;
        (Some(lo * evals_per_sample), Some(hi * evals_per_sample))
    } else {
        (None, None)
    };
    FigureOfMerit {
        n,
        tau,
        pi_hat: fit.pi_hat,
        ess,
        evals_per_indep: total_density_evals as f64 / ess,
        seconds_per_indep: wall_seconds / ess,
        ci_low,
        ci_high,
        reliable,
        clamped: fit.clamped(),
    }
}

pub fn figures_of_merit(result: &ChainResult) -> Result<FigureOfMerit> {
    let ct = chain_tau(&result.samples)?;
    Ok(figures_from_fit(
        &ct.fit,
        result.samples.len(),
        result.total_density_evals,
        result.wall_seconds,
    ))
}
