use super::LogDensity;

/// Estimated treatment effects and their standard errors for the eight
/// schools of the SAT coaching study.
pub const SCHOOL_EFFECTS: [f64; 8] = [28.0, 8.0, -3.0, 7.0, -1.0, 1.0, 18.0, 12.0];
pub const SCHOOL_STD_ERRORS: [f64; 8] = [15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0];

/// Hierarchical normal model over `(θ₁..θ₈, μ, log τ)`.
///
/// `yⱼ ~ N(θⱼ, σⱼ²)`, `θⱼ ~ N(μ, τ²)`, flat priors on `μ` and on `τ > 0`.
/// Sampling happens in `λ = log τ`, so the density carries the Jacobian `τ`.
#[derive(Debug, Clone)]
pub struct EightSchools {
    effects: [f64; 8],
    precisions: [f64; 8],
}

impl EightSchools {
    pub fn new() -> Self {
        Self {
            effects: SCHOOL_EFFECTS,
            precisions: SCHOOL_STD_ERRORS.map(|s| 1.0 / (s * s)),
        }
    }
}

impl Default for EightSchools {
    fn default() -> Self {
        Self::new()
    }
}

impl LogDensity for EightSchools {
    fn dim(&self) -> usize {
        10
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (theta, rest) = x.split_at(8);
        let mu = rest[0];
        let lambda = rest[1];
        let inv_tau_sq = (-2.0 * lambda).exp();

        let mut logp = 0.0;
        let mut d_mu = 0.0;
        let mut sum_sq_dev = 0.0;
        for j in 0..8 {
            let resid = self.effects[j] - theta[j];
            let dev = theta[j] - mu;
            logp -= 0.5 * resid * resid * self.precisions[j];
            sum_sq_dev += dev * dev;
            grad[j] = resid * self.precisions[j] - dev * inv_tau_sq;
            d_mu += dev * inv_tau_sq;
        }
        // Eight N(μ, τ²) normalizers contribute -8λ; the Jacobian adds +λ.
        logp += -0.5 * sum_sq_dev * inv_tau_sq - 7.0 * lambda;
        grad[8] = d_mu;
        grad[9] = sum_sq_dev * inv_tau_sq - 7.0;
        logp
    }
}
