//! Configuration file and resolution: flags, then file, then defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::{DensityKind, EncodingKind, FitKind, NoiseKind, ScheduleKind, WeightKind};
use crate::CliError;

pub const OUT_DIR_ENV: &str = "QSEARCH_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qsearch-out";

/// A grid written either as text (`0:5:0.25`, `0,1,2`) or as a TOML array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Text(String),
    List(Vec<f64>),
}

impl GridValue {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            GridValue::Text(s) => parse_grid(s, name),
            GridValue::List(v) if v.is_empty() => {
                Err(CliError::Config(format!("{name}: empty grid")))
            }
            GridValue::List(v) => Ok(v.clone()),
        }
    }
}

/// Every key is optional; flags with the same name override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub sequential: Option<bool>,
    pub encoding: Option<EncodingKind>,
    pub n: Option<u32>,
    pub d: Option<u64>,
    pub noise: Option<NoiseKind>,
    pub weights: Option<WeightKind>,
    pub density: Option<DensityKind>,
    pub seed: Option<u64>,
    pub schedule: Option<ScheduleKind>,
    pub layers: Option<usize>,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub eps_grid: Option<GridValue>,
    pub r_grid: Option<GridValue>,
    pub realizations: Option<usize>,
    pub sizes: Option<GridValue>,
    pub delta: Option<f64>,
    pub lmax: Option<usize>,
    pub fit: Option<FitKind>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config file {}: {e}", path.display())))
    }
}

/// Inclusive `start:stop:step` or a comma-separated list.
pub fn parse_grid(s: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("{name}: cannot parse grid '{s}': {why}"));
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("'{t}' is not a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan()
                || step <= 0.0
                || stop < start
                || !start.is_finite()
                || !stop.is_finite()
            {
                return Err(bad("need start <= stop and step > 0"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(bad("too many points"));
            }
            (0..count).map(|k| start + k as f64 * step).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list")),
    };
    if values.is_empty() {
        return Err(bad("empty"));
    }
    Ok(values)
}

pub fn resolve_out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Picks the flag, then the file value, then the default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

/// Like [`pick`] but without a default.
pub fn require<T: Clone>(flag: Option<T>, file: &Option<T>, name: &str) -> Result<T, CliError> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| CliError::Config(format!("missing required option --{name}")))
}
