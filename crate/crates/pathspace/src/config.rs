//! Experiment configuration: per-experiment defaults overridden by a TOML file.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Keys accepted at the top level of a config file. Everything else goes in
/// the `[params]` table.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub manifold: Option<String>,
    pub intervals: Option<usize>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub substeps: Option<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// Number-valued tunables of an experiment with their defaults.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    /// Accepted `manifold` values; the first is the default.
    pub manifolds: &'static [&'static str],
    pub intervals: usize,
    pub horizon: f64,
    pub samples: usize,
    pub substeps: usize,
    /// `(key, default)` pairs accepted in `[params]`.
    pub params: &'static [(&'static str, f64)],
}

/// A fully resolved configuration; its canonical JSON form is hashed into
/// every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub manifold: String,
    pub intervals: usize,
    pub horizon: f64,
    pub samples: usize,
    pub substeps: usize,
    pub params: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn resolve(experiment: &str, defaults: &Defaults, file: &ConfigFile) -> Result<Self, ConfigError> {
        let mut params = BTreeMap::new();
        for (k, v) in defaults.params {
            params.insert((*k).to_string(), *v);
        }
        for (k, v) in &file.params {
            if !params.contains_key(k) {
                let known: Vec<&str> = defaults.params.iter().map(|p| p.0).collect();
                return Err(ConfigError::Invalid(format!(
                    "unknown parameter '{k}' for {experiment} (accepted: {})",
                    if known.is_empty() { "none".to_string() } else { known.join(", ") }
                )));
            }
            let x = match v {
                toml::Value::Integer(i) => *i as f64,
                toml::Value::Float(f) => *f,
                _ => return Err(ConfigError::Invalid(format!("parameter '{k}' must be a number"))),
            };
            params.insert(k.clone(), x);
        }
        let cfg = Self {
            experiment: experiment.to_string(),
            manifold: file.manifold.clone().unwrap_or_else(|| defaults.manifolds[0].to_string()),
            intervals: file.intervals.unwrap_or(defaults.intervals),
            horizon: file.horizon.unwrap_or(defaults.horizon),
            samples: file.samples.unwrap_or(defaults.samples),
            substeps: file.substeps.unwrap_or(defaults.substeps),
            params,
        };
        cfg.validate()?;
        if !defaults.manifolds.contains(&cfg.manifold.as_str()) {
            return Err(ConfigError::Invalid(format!(
                "{experiment} does not run on '{}' (accepted: {})",
                cfg.manifold,
                defaults.manifolds.join(", ")
            )));
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.intervals == 0 || self.samples == 0 || self.substeps == 0 {
            return Err(ConfigError::Invalid("intervals, samples and substeps must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if let Some((k, v)) = self.params.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(ConfigError::Invalid(format!("parameter '{k}' must be positive, got {v}")));
        }
        Ok(())
    }

    /// Whether the selected manifold is `name` or `all`.
    pub fn includes(&self, name: &str) -> bool {
        self.manifold == name || self.manifold == "all"
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// A parameter that must be a whole number.
    pub fn count(&self, key: &str) -> usize {
        self.params[key].round() as usize
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: Defaults = Defaults {
        manifolds: &["sphere", "circle"],
        intervals: 64,
        horizon: 1.0,
        samples: 1000,
        substeps: 1,
        params: &[("bins", 32.0)],
    };

    #[test]
    fn overrides_and_hash_stability() {
        let f = ConfigFile::parse("intervals = 128\n[params]\nbins = 16\n").unwrap();
        let c = ExperimentConfig::resolve("x", &D, &f).unwrap();
        assert_eq!((c.intervals, c.count("bins"), c.samples), (128, 16, 1000));
        assert_eq!(c.hash(), ExperimentConfig::resolve("x", &D, &f).unwrap().hash());
        assert_ne!(c.hash(), ExperimentConfig::resolve("x", &D, &ConfigFile::default()).unwrap().hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(ConfigFile::parse("colour = 3").is_err());
        let f = ConfigFile::parse("[params]\nwidth = 3").unwrap();
        assert!(ExperimentConfig::resolve("x", &D, &f).is_err());
        let f = ConfigFile::parse("horizon = -1.0").unwrap();
        assert!(ExperimentConfig::resolve("x", &D, &f).is_err());
        let f = ConfigFile::parse("manifold = \"torus\"").unwrap();
        assert!(ExperimentConfig::resolve("x", &D, &f).is_err());
    }
}
