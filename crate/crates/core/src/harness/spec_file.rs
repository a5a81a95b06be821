use std::path::Path;

use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::samplers::Method;

/// Parses a `key = value` experiment file. Lists are comma-separated,
/// `#` starts a comment, and omitted keys keep their defaults.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {key}: {what}", lineno + 1));
        let list = || -> Vec<&str> {
            value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        };
        match key {
            "targets" => spec.targets = list().into_iter().map(String::from).collect(),
            "methods" => {
                spec.methods = list()
                    .into_iter()
                    .map(str::parse::<Method>)
                    .collect::<Result<_>>()?
            }
            "tunings" => {
                spec.tunings = list()
                    .into_iter()
                    .map(|s| s.parse::<f64>().map_err(|_| bad(s)))
                    .collect::<Result<_>>()?
            }
            "chain_length" => spec.chain_length = value.parse().map_err(|_| bad(value))?,
            "master_seed" => spec.master_seed = value.parse().map_err(|_| bad(value))?,
            "replicate_count" => spec.replicate_count = value.parse().map_err(|_| bad(value))?,
            "parallelism" => spec.parallelism = value.parse().map_err(|_| bad(value))?,
            "theta" => spec.theta = value.parse().map_err(|_| bad(value))?,
            "shrink_factor" => spec.shrink_factor = value.parse().map_err(|_| bad(value))?,
            "approximate_u" => spec.approximate_u = value.parse().map_err(|_| bad(value))?,
            "record_timing" => spec.record_timing = value.parse().map_err(|_| bad(value))?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}
