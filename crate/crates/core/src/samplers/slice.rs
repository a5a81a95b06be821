//! Scalar pieces shared by the crumb samplers: the slice level, the
//! parabolic cut along the gradient and the precision update it drives.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{chud, TriangularFactor};

/// Log slice level `log f(x₀) − e` for a given exponential variate `e`.
#[inline]
pub fn slice_level(logf_x0: f64, e: f64) -> f64 {
    logf_x0 - e
}

/// Draws `ỹ₀ = log f(x₀) − e`, `e ~ Exponential(1)`, which is `log y₀` for
/// `y₀ ~ Uniform[0, f(x₀)]`.
pub fn draw_slice_level<R: Rng + ?Sized>(logf_x0: f64, rng: &mut R) -> f64 {
    // Inverse CDF; 1 - U lies in (0, 1] so the log is finite.
    let e = -(1.0 - rng.random::<f64>()).ln();
    slice_level(logf_x0, e)
}

/// Negated second derivative of the parabola with value `logf_x` and slope
/// `grad_norm` at `t = 0`, passing through `logf_u` at `t = delta`.
pub fn fit_kappa(logf_x: f64, grad_norm: f64, logf_u: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::input(format!("delta must be positive, got {delta}")));
    }
    Ok(-2.0 / (delta * delta) * (logf_u - logf_x - grad_norm * delta))
}

/// Maximum of the parabola fitted by [`fit_kappa`].
pub fn parabola_peak(logf_x: f64, grad_norm: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::NotAPeak { kappa });
    }
    Ok(0.5 * grad_norm * grad_norm / kappa + logf_x)
}

/// Variance of a uniform draw along a parabolic cut of curvature `kappa`
/// whose peak `peak` lies `peak − slice_level` above the slice.
///
/// Equals `d²/12` for the chord length `d = √(8(M − ỹ₀)/κ)`.
pub fn conditional_variance(peak: f64, slice_level: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::NotAPeak { kappa });
    }
    if peak < slice_level {
        return Err(Error::input(format!(
            "mode estimate {peak} lies below the slice level {slice_level}"
        )));
    }
    Ok(2.0 / 3.0 * (peak - slice_level) / kappa)
}

/// Result of one covariance-matching precision update.
#[derive(Debug, Clone)]
pub struct PrecisionUpdate {
    /// Factor of the next crumb precision `W = θΛ + αggᵀ`.
    pub crumb_factor: TriangularFactor,
    /// Factor of the next proposal precision `Λ + W`.
    pub proposal_factor: TriangularFactor,
    pub alpha: f64,
}

/// Chooses `α = max{σ⁻² − (1+θ)gᵀΛg, 0}` and returns the updated factors of
/// `θΛ + αggᵀ` and `(1+θ)Λ + αggᵀ`, where `Λ = RᵀR`.
pub fn crumb_precision_update(
    r: &TriangularFactor,
    g: &[f64],
    sigma_sq: f64,
    theta: f64,
) -> Result<PrecisionUpdate> {
    if g.len() != r.dim() {
        return Err(Error::input(format!(
            "direction has length {}, expected {}",
            g.len(),
            r.dim()
        )));
    }
    let norm_sq: f64 = g.iter().map(|v| v * v).sum();
    if (norm_sq.sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::input(format!(
            "direction must be a unit vector, norm is {}",
            norm_sq.sqrt()
        )));
    }
    if !(sigma_sq > 0.0) || !(theta > 0.0) {
        return Err(Error::input(format!(
            "need sigma_sq > 0 and theta > 0, got {sigma_sq} and {theta}"
        )));
    }
    let alpha = (1.0 / sigma_sq - (1.0 + theta) * r.quadratic_form(g)).max(0.0);
    let v: Vec<f64> = g.iter().map(|gi| alpha.sqrt() * gi).collect();
    Ok(PrecisionUpdate {
        crumb_factor: chud(&r.scaled(theta.sqrt())?, &v)?,
        proposal_factor: chud(&r.scaled((1.0 + theta).sqrt())?, &v)?,
        alpha,
    })
}
