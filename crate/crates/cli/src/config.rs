//! Flat key=value run configuration with the precedence
//! flags > environment > file > defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kac_core::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "n",
    "beta",
    "delta",
    "seed",
    "samples",
    "steps",
    "stride",
    "out",
    "grid_theta",
    "grid_phi",
    "grid_r",
    "synthetic",
    "oracle_gaussian",
    "timing",
    "threads",
];

const ENV_PREFIX: &str = "KACLAB_";

/// Resolved configuration; every effective entry is echoed into output
/// headers in sorted order.
#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Builds the effective configuration. `flags` carries the
    /// command-line values (highest precedence); `None` flags are skipped.
    pub fn resolve(
        file: Option<&Path>,
        flags: &[(&str, Option<String>)],
    ) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in [
            ("beta", "0.1"),
            ("seed", "0"),
            ("samples", "100000"),
            ("steps", "10000"),
            ("stride", "100"),
            ("grid_theta", "256"),
            ("grid_phi", "256"),
            ("grid_r", "128"),
            ("synthetic", "false"),
            ("oracle_gaussian", "false"),
            ("timing", "false"),
        ] {
            entries.insert(k.into(), v.into());
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: expected key=value, got '{line}'",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                let key = key.trim().to_lowercase();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(Error::Config(format!(
                        "{}:{}: unknown key '{key}'",
                        path.display(),
                        lineno + 1
                    )));
                }
                entries.insert(key, value.trim().to_string());
            }
        }
        for (key, value) in std::env::vars() {
            if let Some(suffix) = key.strip_prefix(ENV_PREFIX) {
                let k = suffix.to_lowercase();
                if !KNOWN_KEYS.contains(&k.as_str()) {
                    return Err(Error::Config(format!(
                        "unknown environment key {key}"
                    )));
                }
                entries.insert(k, value);
            }
        }
        for (key, value) in flags {
            if let Some(v) = value {
                debug_assert!(KNOWN_KEYS.contains(key));
                entries.insert((*key).into(), v.clone());
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.entries.iter()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{s}'"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn beta(&self) -> Result<f64> {
        self.require("beta")
    }

    pub fn delta(&self) -> Result<Option<f64>> {
        self.parse("delta")
    }

    pub fn seed(&self) -> Result<u64> {
        self.require("seed")
    }

    pub fn samples(&self) -> Result<usize> {
        self.require("samples")
    }

    pub fn steps(&self) -> Result<u64> {
        self.require("steps")
    }

    pub fn stride(&self) -> Result<u64> {
        self.require("stride")
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }

    pub fn n_list(&self) -> Result<Vec<u32>> {
        let raw = self
            .raw("n")
            .ok_or_else(|| Error::Config("missing required key 'n' (--N)".into()))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("key 'n': cannot parse '{s}'")))
            })
            .collect()
    }

    pub fn single_n(&self) -> Result<u32> {
        let ns = self.n_list()?;
        if ns.len() != 1 {
            return Err(Error::Config(format!(
                "expected a single N, got {ns:?}"
            )));
        }
        Ok(ns[0])
    }

    pub fn grid(&self) -> Result<kac_core::functionals::AngularGrid> {
        Ok(kac_core::functionals::AngularGrid {
            theta: self.require("grid_theta")?,
            phi: self.require("grid_phi")?,
            radial: self.require("grid_r")?,
            ..kac_core::functionals::AngularGrid::default()
        })
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(Error::Config(format!(
                "key '{key}': expected a boolean, got '{other}'"
            ))),
        }
    }

    pub fn synthetic(&self) -> Result<bool> {
        self.flag("synthetic")
    }

    pub fn oracle_gaussian(&self) -> Result<bool> {
        self.flag("oracle_gaussian")
    }

    pub fn timing(&self) -> Result<bool> {
        self.flag("timing")
    }

    pub fn threads(&self) -> Result<Option<usize>> {
        self.parse("threads")
    }
}
