//! `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are dotted names from [`KEYS`]; anything else is rejected. Numbers
//! use Rust's `FromStr`, which is locale independent. `run.h` takes a
//! comma-separated list.
//!
//! Precedence when resolving: explicit override (command-line flag), then
//! the file, then `NETSIM_SEED` for the seed, then built-in defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use netsim_core::dts::StepPolicy;
use netsim_core::graph::{GraphKind, GraphSpec};
use netsim_core::process::{ProcessKind, ProcessParams};

use crate::experiments::{ExperimentConfig, Mode};

pub const KEYS: &[&str] = &[
    "graph.kind",
    "graph.width",
    "graph.height",
    "graph.target_degree",
    "graph.seed",
    "process.kind",
    "process.beta",
    "process.mu",
    "init.prevalence",
    "run.t_end",
    "run.h",
    "run.replications",
    "run.mode",
    "run.step_policy",
    "run.workers",
    "output.dir",
    "seed",
];

pub const SEED_ENV: &str = "NETSIM_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.into()));
            }
            if cfg.values.insert(key.into(), value.into()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.into(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Overrides (or adds) a value; used for command-line flags.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        self.values.insert(key.into(), value.into());
        Ok(())
    }

    fn typed<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    fn typed_or<T>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.typed(key)?.unwrap_or(default))
    }

    /// Resolves the master seed: `seed` key, then the environment value,
    /// then [`DEFAULT_SEED`].
    pub fn seed(&self, env_seed: Option<&str>) -> Result<u64, ConfigError> {
        if let Some(s) = self.typed("seed")? {
            return Ok(s);
        }
        match env_seed {
            Some(v) => parse_value(SEED_ENV, v.trim()),
            None => Ok(DEFAULT_SEED),
        }
    }

    /// Graph recipe from `graph.*`; the small-world seed defaults to `seed`.
    pub fn graph_spec(&self, seed: u64) -> Result<GraphSpec, ConfigError> {
        let kind: GraphKind = self.typed_or("graph.kind", GraphKind::Torus)?;
        let width = self.typed_or("graph.width", 30usize)?;
        let height = self.typed_or("graph.height", 30usize)?;
        match kind {
            GraphKind::Torus => Ok(GraphSpec::Torus { width, height }),
            GraphKind::SmallWorld => Ok(GraphSpec::SmallWorld {
                width,
                height,
                target_degree: self.typed_or("graph.target_degree", 5usize)?,
                seed: self.typed_or("graph.seed", seed)?,
            }),
            GraphKind::Tree => Err(ConfigError::Invalid(
                "graph.kind = tree is only available through generate-graph flags".into(),
            )),
        }
    }

    pub fn process(&self) -> Result<ProcessParams, ConfigError> {
        let kind: ProcessKind = self.typed_or("process.kind", ProcessKind::Si)?;
        let beta = self.typed_or("process.beta", 1.0f64)?;
        let mu = match kind {
            ProcessKind::Si => 0.0,
            ProcessKind::Sis => self.typed_or("process.mu", 0.2f64)?,
        };
        ProcessParams::new(kind, beta, mu).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn h_values(&self) -> Result<Vec<f64>, ConfigError> {
        let Some(raw) = self.get("run.h") else {
            return Ok(vec![0.01]);
        };
        let hs = raw
            .split(',')
            .map(|s| parse_value::<f64>("run.h", s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if hs.is_empty() || hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(ConfigError::BadValue {
                key: "run.h".into(),
                value: raw.into(),
                reason: "step sizes must be finite and > 0".into(),
            });
        }
        Ok(hs)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output.dir").unwrap_or("netsim-out"))
    }

    /// Full experiment description.
    pub fn experiment(&self, env_seed: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
        let master_seed = self.seed(env_seed)?;
        let cfg = ExperimentConfig {
            graph: self.graph_spec(master_seed)?,
            params: self.process()?,
            prevalence: self.typed_or("init.prevalence", 0.1f64)?,
            t_end: self.typed_or("run.t_end", 1.0f64)?,
            replications: self.typed_or("run.replications", 100u64)?,
            h_values: self.h_values()?,
            mode: self.typed_or("run.mode", Mode::Des)?,
            step_policy: self.typed_or("run.step_policy", StepPolicy::Truncate)?,
            workers: self.typed_or("run.workers", 0usize)?,
            master_seed,
            regenerate_graph: false,
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse_value<T>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}
