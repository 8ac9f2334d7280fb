//! Plain-text `key = value` model configuration files.
//!
//! Documented keys: `family`, `dim`, `v`, `b`, `L`, `theta0`, `domain`,
//! `seed`. Lines starting with `#` (or trailing `#` fragments) are comments;
//! blank lines are skipped. Values are scalars or comma-separated lists
//! (`theta0 = 0.1, -0.2`, `domain = 0, 1`). CLI flags override these values.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &["family", "dim", "v", "b", "L", "theta0", "domain", "seed"];

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key {key:?} (known: {})",
                    lineno + 1,
                    KNOWN_KEYS.join(", ")
                )));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("key {key:?}: cannot parse {raw:?}"))
            }),
        }
    }

    pub fn family(&self) -> Option<&str> {
        self.get("family")
    }

    pub fn dim(&self) -> Result<Option<usize>> {
        self.parse_as("dim")
    }

    pub fn v(&self) -> Result<Option<f64>> {
        self.parse_as("v")
    }

    pub fn b(&self) -> Result<Option<f64>> {
        self.parse_as("b")
    }

    pub fn radius_l(&self) -> Result<Option<f64>> {
        self.parse_as("L")
    }

    pub fn seed(&self) -> Result<Option<u64>> {
        self.parse_as("seed")
    }

    pub fn theta0(&self) -> Result<Option<Vec<f64>>> {
        self.float_list("theta0")
    }

    pub fn domain(&self) -> Result<Option<(f64, f64)>> {
        match self.float_list("domain")? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some((v[0], v[1]))),
            Some(v) => Err(Error::InvalidConfig(format!(
                "key \"domain\": expected `lo, hi` with lo < hi, got {v:?}"
            ))),
        }
    }

    fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|f| {
                    f.trim().parse().map_err(|_| {
                        Error::InvalidConfig(format!("key {key:?}: cannot parse {f:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }
}
