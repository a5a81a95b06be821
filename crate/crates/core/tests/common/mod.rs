//! Independent oracles shared by the integration tests: dense linear
//! algebra through nalgebra, central finite differences and a
//! Kolmogorov-Smirnov test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crumb_slice::linalg::TriangularFactor;
use crumb_slice::samplers::{
    cm_step, AdaptationEvent, CrumbEvent, CrumbObserver, Method, SamplerConfig, State,
};
use crumb_slice::targets::LogDensity;
use crumb_slice::targets::Target;

/// Random upper-triangular factor with diagonal in `[0.5, 2)` and
/// off-diagonal entries in `[-1, 1)`.
pub fn random_factor<R: Rng>(p: usize, rng: &mut R) -> TriangularFactor {
    let mut e = vec![0.0; p * p];
    for i in 0..p {
        e[i * p + i] = rng.random_range(0.5..2.0);
        for j in i + 1..p {
            e[i * p + j] = rng.random_range(-1.0..1.0);
        }
    }
    TriangularFactor::new(p, e).unwrap()
}

pub fn random_vec<R: Rng>(p: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..p)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect()
}

pub fn dense(r: &TriangularFactor) -> DMatrix<f64> {
    let p = r.dim();
    DMatrix::from_fn(p, p, |i, j| r.get(i, j))
}

pub fn dense_vec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

/// Upper factor `U` with `UᵀU = a`, from nalgebra's dense Cholesky.
pub fn dense_upper_cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone()
        .cholesky()
        .expect("matrix is not positive definite")
        .l()
        .transpose()
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central-difference gradient with step `1e-5·(1 + |xᵢ|)`.
pub fn fd_gradient(model: &dyn LogDensity, x: &[f64]) -> Vec<f64> {
    let mut scratch = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let up = model.log_density_and_gradient(&xp, &mut scratch);
            xp[i] = x[i] - h;
            let down = model.log_density_and_gradient(&xp, &mut scratch);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, 1)`: relative for large components, absolute
/// near zero where a relative error is meaningless.
pub fn gradient_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Two-sided one-sample Kolmogorov-Smirnov test. Returns `(D, p-value)`
/// using the asymptotic distribution with Stephens' small-sample
/// correction.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    (d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d))
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Stationary AR(1) series `xₜ = π xₜ₋₁ + aₜ` with unit-variance
/// increments.
pub fn ar1_series<R: Rng>(pi: f64, n: usize, rng: &mut R) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let mut x = rng.sample::<f64, _>(StandardNormal) / (1.0 - pi * pi).sqrt();
    (0..n)
        .map(|_| {
            x = pi * x + rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

/// Mirrors the covariance-matching recurrence with dense matrices, fed only
/// by the directions and variances the kernel reports.
pub struct DenseShadow {
    pub sigma_c: f64,
    pub theta: f64,
    pub crumb_precision: DMatrix<f64>,
    pub proposal_precision: DMatrix<f64>,
    pub weighted_sum: nalgebra::DVector<f64>,
    /// First crumb of the current update; sums are taken relative to it.
    pub origin: nalgebra::DVector<f64>,
    pub worst_mean: f64,
    pub worst_precision: f64,
    pub worst_crumb_precision: f64,
    pub worst_alpha: f64,
    pub events: usize,
    /// Events whose mean was compared; the rest had `ε·cond(Λ) > 1e-9`,
    /// where two exact dense formulas already differ by more than 1e-8.
    pub mean_events: usize,
}

impl DenseShadow {
    pub fn new(p: usize, sigma_c: f64, theta: f64) -> Self {
        let w = DMatrix::identity(p, p) / (sigma_c * sigma_c);
        Self {
            sigma_c,
            theta,
            crumb_precision: w.clone(),
            proposal_precision: w,
            weighted_sum: nalgebra::DVector::zeros(p),
            origin: nalgebra::DVector::zeros(p),
            worst_mean: 0.0,
            worst_precision: 0.0,
            worst_crumb_precision: 0.0,
            worst_alpha: 0.0,
            events: 0,
            mean_events: 0,
        }
    }
}

impl CrumbObserver for DenseShadow {
    fn on_crumb(&mut self, e: &CrumbEvent<'_>) {
        let p = e.crumb.len();
        if e.index == 1 {
            // A new update: crumb and proposal precisions restart at σ_c⁻²I.
            let w = DMatrix::identity(p, p) / (self.sigma_c * self.sigma_c);
            self.crumb_precision = w.clone();
            self.proposal_precision = w;
            self.weighted_sum = nalgebra::DVector::zeros(p);
            self.origin = dense_vec(e.crumb);
        }
        // Λ⁻¹ΣWᵢcᵢ = o + Λ⁻¹ΣWᵢ(cᵢ − o) since Λ = ΣWᵢ; the shifted form
        // avoids cancellation when Λ is badly conditioned.
        self.weighted_sum += &self.crumb_precision * (dense_vec(e.crumb) - &self.origin);
        let mean = &self.origin
            + self
                .proposal_precision
                .clone()
                .cholesky()
                .unwrap()
                .solve(&self.weighted_sum);
        let ev = nalgebra::SymmetricEigen::new(self.proposal_precision.clone()).eigenvalues;
        if f64::EPSILON * ev.max() / ev.min() <= 1e-9 {
            let err = (dense_vec(e.proposal_mean) - &mean).norm() / mean.norm().max(1.0);
            self.worst_mean = self.worst_mean.max(err);
            self.mean_events += 1;
        }
        let r = dense(e.proposal_factor);
        let lambda = r.transpose() * &r;
        self.worst_precision = self
            .worst_precision
            .max(rel_frobenius(&lambda, &self.proposal_precision));
        let f = dense(e.crumb_factor);
        self.worst_crumb_precision = self
            .worst_crumb_precision
            .max(rel_frobenius(&(f.transpose() * &f), &self.crumb_precision));
        self.events += 1;
    }

    fn on_adaptation(&mut self, e: &AdaptationEvent<'_>) {
        let alpha = match (e.direction, e.sigma_sq) {
            (Some(g), Some(s2)) => {
                let gd = dense_vec(g);
                let gl = (gd.transpose() * &self.proposal_precision * &gd)[0];
                let a = (1.0 / s2 - (1.0 + self.theta) * gl).max(0.0);
                self.worst_alpha = self.worst_alpha.max((a - e.alpha).abs() / (1.0 / s2));
                let ggt = &gd * gd.transpose();
                self.crumb_precision = &self.proposal_precision * self.theta + &ggt * a;
                a
            }
            _ => {
                assert_eq!(e.alpha, 0.0);
                self.crumb_precision = &self.proposal_precision * self.theta;
                0.0
            }
        };
        assert!(alpha >= 0.0);
        self.proposal_precision = &self.proposal_precision + &self.crumb_precision;
    }
}

pub fn shadow_run(target: &mut Target, sigma_c: f64, updates: usize, seed: u64) -> DenseShadow {
    let config = SamplerConfig::new(Method::CovarianceMatching, sigma_c);
    let p = target.dim();
    let mut shadow = DenseShadow::new(p, sigma_c, config.theta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::at(target, vec![0.0; p]).unwrap();
    for _ in 0..updates {
        state = cm_step(&state, target, &config, &mut rng, &mut shadow)
            .unwrap()
            .state;
    }
    shadow
}
