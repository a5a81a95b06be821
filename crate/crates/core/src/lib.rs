//! Gaussian-crumb slice samplers with covariance adaptation.
//!
//! The crate provides two adaptive slice samplers (covariance matching and
//! shrinking rank), two baselines (non-adaptive crumbs and Metropolis with
//! trial runs), four benchmark targets, AR(1)-based correlation-length
//! diagnostics and a harness that sweeps samplers × targets × tuning
//! parameters.
//!
//! ```
//! use crumb_slice::samplers::{run_chain, Method, SamplerConfig};
//! use crumb_slice::targets::Target;
//! use crumb_slice::diagnostics::figures_of_merit;
//!
//! let mut target = Target::by_name("n4-pos").unwrap();
//! let config = SamplerConfig::new(Method::ShrinkingRank, 10.0);
//! let chain = run_chain(&config, &mut target, 2_000, 42).unwrap();
//! let merit = figures_of_merit(&chain).unwrap();
//! assert!(merit.tau >= 1.0);
//! ```

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};
