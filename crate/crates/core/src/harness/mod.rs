//! Experiment grid over targets × methods × tuning parameters.
//!
//! Every cell of the grid is an independent chain with its own target
//! instance and a seed derived from the master seed and the cell index, so
//! the output does not depend on how cells are scheduled.

mod csv_io;
mod plot;
mod spec_file;

pub use csv_io::{format_float, read_csv, write_csv, write_csv_to, CSV_HEADER};
pub use plot::{emit_plot_script, plot_script};
pub use spec_file::{parse_spec, read_spec};

use crate::diagnostics::{chain_tau, figures_from_fit};
use crate::error::{Error, Result};
use crate::samplers::{run_chain, ChainResult, Method, SamplerConfig};
use crate::targets::Target;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub targets: Vec<String>,
    pub methods: Vec<Method>,
    pub tunings: Vec<f64>,
    pub chain_length: usize,
    pub master_seed: u64,
    pub replicate_count: usize,
    /// Worker threads; 0 means one per available core.
    pub parallelism: usize,
    pub theta: f64,
    pub shrink_factor: f64,
    pub approximate_u: bool,
    /// Emit wall-clock figures. With timing off the CSV is byte-for-byte
    /// reproducible.
    pub record_timing: bool,
}

/// Twelve tuning parameters spaced evenly in log between `10^-1.5` and
/// `10^3.5`.
pub fn default_tunings() -> Vec<f64> {
    (0..12)
        .map(|i| 10f64.powf(-1.5 + 5.0 * i as f64 / 11.0))
        .collect()
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            targets: crate::targets::TARGET_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            methods: Method::ALL.to_vec(),
            tunings: default_tunings(),
            chain_length: 150_000,
            master_seed: 1,
            replicate_count: 1,
            parallelism: 0,
            theta: 1.0,
            shrink_factor: 0.9,
            approximate_u: false,
            record_timing: true,
        }
    }
}

impl ExperimentSpec {
    /// Checks the spec, including that every target name resolves.
    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() || self.methods.is_empty() || self.tunings.is_empty() {
            return Err(Error::Config(
                "targets, methods and tunings must be nonempty".into(),
            ));
        }
        if self.chain_length < 10 {
            return Err(Error::Config(format!(
                "chain_length must be at least 10, got {}",
                self.chain_length
            )));
        }
        if self.replicate_count == 0 {
            return Err(Error::Config("replicate_count must be at least 1".into()));
        }
        if let Some(t) = self.tunings.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Config(format!(
                "tuning parameters must be positive, got {t}"
            )));
        }
        for name in &self.targets {
            Target::by_name(name)?;
        }
        self.sampler_config(Method::CovarianceMatching, 1.0)
            .validate()
    }

    /// Sampler settings for one cell of this spec.
    pub fn sampler_config(&self, method: Method, tuning: f64) -> SamplerConfig {
        let mut c = SamplerConfig::new(method, tuning);
        c.theta = self.theta;
        c.shrink_factor = self.shrink_factor;
        c.approximate_u = self.approximate_u;
        c
    }

    /// All cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for target in &self.targets {
            for &method in &self.methods {
                for &tuning in &self.tunings {
                    for replicate in 0..self.replicate_count {
                        let index = cells.len() as u64;
                        cells.push(Cell {
                            index,
                            target: target.clone(),
                            method,
                            tuning,
                            replicate,
                            seed: cell_seed(self.master_seed, index),
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One chain of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub target: String,
    pub method: Method,
    pub tuning: f64,
    pub replicate: usize,
    pub seed: u64,
}

/// SplitMix64 finalizer applied to the master seed and the cell index.
pub fn cell_seed(master_seed: u64, index: u64) -> u64 {
    let mut z =
        master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One line of the results table. Diagnostic fields are `None` for failed
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub target: String,
    pub method: String,
    pub tuning: f64,
    pub seed: u64,
    pub n: usize,
    pub tau: Option<f64>,
    pub ess: Option<f64>,
    pub evals_per_indep: Option<f64>,
    pub seconds_per_indep: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub reliable: Option<bool>,
    pub error_flag: bool,
}

impl ResultRow {
    fn failed(cell: &Cell, n: usize) -> Self {
        Self {
            target: cell.target.clone(),
            method: cell.method.as_str().to_string(),
            tuning: cell.tuning,
            seed: cell.seed,
            n,
            tau: None,
            ess: None,
            evals_per_indep: None,
            seconds_per_indep: None,
            ci_low: None,
            ci_high: None,
            reliable: None,
            error_flag: true,
        }
    }
}

/// Runs one cell. Failures of the chain become flagged rows.
pub fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> ResultRow {
    let mut target = match Target::by_name(&cell.target) {
        Ok(t) => t,
        Err(_) => return ResultRow::failed(cell, 0),
    };
    let config = spec.sampler_config(cell.method, cell.tuning);
    match run_chain(&config, &mut target, spec.chain_length, cell.seed) {
        Ok(chain) => summarize(cell, &chain, spec.record_timing),
        Err(_) => ResultRow::failed(cell, 0),
    }
}

/// Result row for a finished chain: figures of merit, or a flagged row if
/// the chain aborted or its diagnostics are degenerate.
pub fn summarize(cell: &Cell, chain: &ChainResult, record_timing: bool) -> ResultRow {
    let n = chain.samples.len();
    if !chain.status.is_complete() {
        return ResultRow::failed(cell, n);
    }
    let fit = match chain_tau(&chain.samples) {
        Ok(ct) => ct.fit,
        Err(_) => return ResultRow::failed(cell, n),
    };
    let merit = figures_from_fit(&fit, n, chain.total_density_evals, chain.wall_seconds);
    ResultRow {
        target: cell.target.clone(),
        method: cell.method.as_str().to_string(),
        tuning: cell.tuning,
        seed: cell.seed,
        n,
        tau: Some(merit.tau),
        ess: Some(merit.ess),
        evals_per_indep: Some(merit.evals_per_indep),
        seconds_per_indep: record_timing.then_some(merit.seconds_per_indep),
        ci_low: merit.ci_low,
        ci_high: merit.ci_high,
        reliable: Some(merit.reliable),
        error_flag: false,
    }
}

/// How cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    /// Rayon pool with the given thread count (0 = one per core).
    #[cfg(feature = "parallel")]
    Parallel(usize),
}

impl Schedule {
    /// Parallel unless `parallelism == 1` or the `parallel` feature is off.
    pub fn for_parallelism(parallelism: usize) -> Self {
        #[cfg(feature = "parallel")]
        if parallelism != 1 {
            return Schedule::Parallel(parallelism);
        }
        let _ = parallelism;
        Schedule::Sequential
    }
}

/// Runs every cell and returns rows in cell order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    run_experiment_with(spec, Schedule::for_parallelism(spec.parallelism))
}

pub fn run_experiment_with(spec: &ExperimentSpec, schedule: Schedule) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let cells = spec.cells();
    match schedule {
        Schedule::Sequential => Ok(cells.iter().map(|c| run_cell(spec, c)).collect()),
        #[cfg(feature = "parallel")]
        Schedule::Parallel(threads) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            // Indexed collect keeps cell order whatever the completion order.
            Ok(pool.install(|| cells.par_iter().map(|c| run_cell(spec, c)).collect()))
        }
    }
}
