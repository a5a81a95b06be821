use super::{LogDensity, Moments, LN_2PI};
use crate::error::{Error, Result};

/// `N(0, Σ)` with `Σᵢᵢ = 1` and `Σᵢⱼ = ρ` off the diagonal.
///
/// The precision is kept in the closed form `Σ⁻¹ = aI + b11ᵀ`, so nothing is
/// inverted numerically even when `Σ` is badly conditioned.
#[derive(Debug, Clone)]
pub struct EquicorrelatedGaussian {
    dim: usize,
    rho: f64,
    diag_coef: f64,
    ones_coef: f64,
    log_norm: f64,
}

impl EquicorrelatedGaussian {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "equicorrelated Gaussian needs p >= 2, got {dim}"
            )));
        }
        let lower = -1.0 / (dim as f64 - 1.0);
        if !(rho.is_finite() && rho > lower && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho = {rho} outside ({lower}, 1); correlation matrix would not be positive definite"
            )));
        }
        let p = dim as f64;
        // Eigenvalues: 1 + (p-1)ρ once, 1 - ρ with multiplicity p - 1.
        let big = 1.0 + (p - 1.0) * rho;
        let small = 1.0 - rho;
        let diag_coef = 1.0 / small;
        let ones_coef = -rho / (small * big);
        let log_det = (p - 1.0) * small.ln() + big.ln();
        Ok(Self {
            dim,
            rho,
            diag_coef,
            ones_coef,
            log_norm: -0.5 * (p * LN_2PI + log_det),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Covariance eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let p = self.dim as f64;
        let mut ev = vec![1.0 - self.rho; self.dim - 1];
        ev.push(1.0 + (p - 1.0) * self.rho);
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[ev.len() - 1] / ev[0]
    }

    /// `Σ⁻¹ v`.
    pub fn precision_times(&self, v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter()
            .map(|vi| self.diag_coef * vi + self.ones_coef * s)
            .collect()
    }
}

impl LogDensity for EquicorrelatedGaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let s: f64 = x.iter().sum();
        let mut quad = 0.0;
        for (g, xi) in grad.iter_mut().zip(x) {
            let px = self.diag_coef * xi + self.ones_coef * s;
            quad += xi * px;
            *g = -px;
        }
        self.log_norm - 0.5 * quad
    }

    fn reference_moments(&self) -> Option<Moments> {
        let p = self.dim;
        let mut covariance = vec![self.rho; p * p];
        for i in 0..p {
            covariance[i * p + i] = 1.0;
        }
        Some(Moments {
            mean: vec![0.0; p],
            covariance,
        })
    }
}
