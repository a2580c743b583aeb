//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Keys starting with `tol.` override experiment tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "lanford",
            Self::E2 => "diffusive",
            Self::E3 => "fourier-fit",
            Self::E4 => "monitors",
            Self::E5 => "series",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentId {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "E1" | "LANFORD" => Self::E1,
            "E2" | "DIFFUSIVE" => Self::E2,
            "E3" | "FOURIER-FIT" => Self::E3,
            "E4" | "MONITORS" => Self::E4,
            "E5" | "SERIES" => Self::E5,
            _ => bail!("unknown experiment {s:?}, expected E1..E5"),
        })
    }
}

/// Parsed key-value pairs in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("line {}: empty key", no + 1);
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key {k:?}", no + 1);
            }
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| anyhow!("key {key:?}: cannot parse {s:?}: {e}")),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
        T: Clone,
    {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|e| anyhow!("key {key:?}: cannot parse {x:?}: {e}")))
                .collect(),
        }
    }

    /// Tolerance `name`, overridable by `tol.name`.
    pub fn tol(&self, name: &str, default: f64) -> Result<f64> {
        self.get(&format!("tol.{name}"), default)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub params: KeyValues,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, seed: u64, params: KeyValues) -> Result<Self> {
        if let Some(e) = params.raw("experiment") {
            let named: ExperimentId = e.parse()?;
            if named != experiment {
                bail!("config names experiment {named} but {experiment} was requested");
            }
        }
        Ok(Self { experiment, seed, params })
    }
}
