use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LogDensity, Moments, LN_2PI};

/// Seed for the default placement of the mixture modes.
pub const DEFAULT_MIXTURE_SEED: u64 = 20_100_308;

/// Equally weighted mixture of unit-variance spherical Gaussians.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    modes: Vec<Vec<f64>>,
    log_weight: f64,
}

impl GaussianMixture {
    /// `components` modes drawn uniformly on `[0, edge]^dim`.
    pub fn uniform_modes(dim: usize, components: usize, edge: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..components)
            .map(|_| (0..dim).map(|_| rng.random::<f64>() * edge).collect())
            .collect();
        Self::with_modes(modes)
    }

    /// Panics if `modes` is empty or ragged.
    pub fn with_modes(modes: Vec<Vec<f64>>) -> Self {
        assert!(!modes.is_empty(), "mixture needs at least one component");
        let dim = modes[0].len();
        assert!(
            modes.iter().all(|m| m.len() == dim),
            "modes must share a dimension"
        );
        let log_weight = -(modes.len() as f64).ln();
        Self {
            dim,
            modes,
            log_weight,
        }
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    /// Log density of component `k` alone (without its mixture weight).
    pub fn component_log_density(&self, k: usize, x: &[f64]) -> f64 {
        let sq: f64 = x
            .iter()
            .zip(&self.modes[k])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        -0.5 * (sq + self.dim as f64 * LN_2PI)
    }
}

impl LogDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let terms: Vec<f64> = (0..self.modes.len())
            .map(|k| self.component_log_density(k, x) + self.log_weight)
            .collect();
        let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (mode, t) in self.modes.iter().zip(&terms) {
            let w = (t - peak).exp();
            total += w;
            for ((g, m), xi) in grad.iter_mut().zip(mode).zip(x) {
                *g += w * (m - xi);
            }
        }
        grad.iter_mut().for_each(|g| *g /= total);
        peak + total.ln()
    }

    fn reference_moments(&self) -> Option<Moments> {
        let p = self.dim;
        let n = self.modes.len() as f64;
        let mean: Vec<f64> = (0..p)
            .map(|i| self.modes.iter().map(|m| m[i]).sum::<f64>() / n)
            .collect();
        let mut covariance = vec![0.0; p * p];
        for i in 0..p {
            covariance[i * p + i] = 1.0;
            for j in 0..p {
                covariance[i * p + j] += self
                    .modes
                    .iter()
                    .map(|m| (m[i] - mean[i]) * (m[j] - mean[j]))
                    .sum::<f64>()
                    / n;
            }
        }
        Some(Moments { mean, covariance })
    }
}
