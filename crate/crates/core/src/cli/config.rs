//! Flat `key = value` run configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "b_prior",
    "binary_quantile",
    "burn_in",
    "check",
    "count_rate",
    "data",
    "draws",
    "fit_dir",
    "iterations",
    "jobs",
    "kinds",
    "method",
    "missing_fraction",
    "ordinal_levels",
    "out",
    "prior_edge_logit",
    "prior_scale",
    "rate_cap",
    "replicates",
    "scenarios",
    "schema",
    "seed",
    "simulation_dir",
    "thin",
    "threshold",
];

/// Parsed configuration file. Later lines win for single-valued keys;
/// `check` may repeat. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: Vec<(String, String)>,
    base_dir: PathBuf,
    source: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base, &path.display().to_string())
    }

    pub fn parse(text: &str, base_dir: PathBuf, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: format!("{source}:{}", lineno + 1),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key `{key}`")));
            }
            entries.push((key, value.trim().to_string()));
        }
        let cfg = Config {
            entries,
            base_dir,
            source: source.to_string(),
        };
        if let Some(scale) = cfg.get("prior_scale") {
            if scale != "identity" {
                return Err(Error::Parse {
                    path: cfg.source.clone(),
                    message: format!(
                        "prior_scale `{scale}` is not supported: the edge rates use the exact \
                         normalizing-constant ratio, which holds only for the identity scale"
                    ),
                });
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()).collect()
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| Error::Parse {
                    path: self.source.clone(),
                    message: format!("bad value `{v}` for `{key}`: {e}"),
                })
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse {
            path: self.source.clone(),
            message: format!("missing required key `{key}`"),
        })
    }

    /// Path value resolved against the config directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base_dir.join(v))
    }

    /// Like [`Config::path`] but the key must be present and the path exist.
    pub fn existing_path(&self, key: &str) -> Result<PathBuf> {
        let p = self.base_dir.join(self.require(key)?);
        if !p.exists() {
            return Err(Error::Parse {
                path: self.source.clone(),
                message: format!("`{key}` points to missing path {}", p.display()),
            });
        }
        Ok(p)
    }

    /// `key = value` lines in insertion order, for echoing into run metadata.
    pub fn echo(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
