//! Plain-text `key=value` configuration with section-prefixed keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key the tool understands. Anything else is a configuration error.
pub const KNOWN_KEYS: &[&str] = &[
    "experiment.maps",
    "experiment.observables",
    "experiment.n",
    "experiment.replications",
    "experiment.B",
    "experiment.alpha",
    "experiment.sigma_reps",
    "experiment.seed",
    "experiment.methods",
    "experiment.sides",
    "bandwidth.rule",
    "bandwidth.divisor",
    "bandwidth.value",
    "spline.pivoted",
    "spline.nonpivoted",
    "spline.sparse",
    "t.scale",
    "map.drill_lambda",
    "map.drill_extension",
    "map.logistic_r",
    "map.perturbation",
    "simulate.map",
    "simulate.n",
    "simulate.x0",
    "bootstrap.map",
    "bootstrap.observable",
    "bootstrap.n",
    "edgeworth.map",
    "edgeworth.observable",
    "edgeworth.n",
    "edgeworth.reps",
    "edgeworth.B",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("cannot parse {key}={v:?}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list, each item parsed by `parse`.
    pub fn list<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse(s).ok_or_else(|| Error::Config(format!("{key}: bad item {s:?}"))))
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::Config(format!("{key} is empty")));
        }
        Ok(Some(items))
    }
}
