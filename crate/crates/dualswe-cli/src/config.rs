//! Flat `key = value` run configuration with `[section]` headers.
//!
//! Dependency-free parsing; unknown sections or keys are rejected with
//! the offending name so typos cannot silently change a run.

use dualswe::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "mesh",
        &[
            "type",
            "nx",
            "ny",
            "lx",
            "ly",
            "jitter",
            "mesh_seed",
            "path",
        ],
    ),
    (
        "physics",
        &["gravity", "f0", "phi_mean", "psi_amp", "chi_amp", "phi_amp"],
    ),
    ("time", &["scheme", "integrator", "dt", "steps"]),
    ("solver", &["tol"]),
    ("output", &["every"]),
];

/// Parsed configuration: `section.key` → value string.
#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        let mut section: Option<&'static str> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let known = SECTIONS.iter().find(|(s, _)| *s == name.trim());
                match known {
                    Some((s, _)) => section = Some(s),
                    None => {
                        return Err(Error::Config(format!(
                            "line {line}: unknown section [{}]",
                            name.trim()
                        )))
                    }
                }
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line}: expected `key = value`, got {trimmed:?}"
                )));
            };
            let key = key.trim();
            let Some(section) = section else {
                return Err(Error::Config(format!(
                    "line {line}: key {key:?} before any [section]"
                )));
            };
            let allowed = SECTIONS.iter().find(|(s, _)| *s == section).unwrap().1;
            if !allowed.contains(&key) {
                return Err(Error::Config(format!(
                    "line {line}: unknown key {key:?} in [{section}]"
                )));
            }
            values.insert(format!("{section}.{key}"), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {path:?}: {e}")))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad number {s:?}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad count {s:?}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad integer {s:?}"))),
        }
    }

    /// All resolved entries, for the reproducibility header.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let cfg = Config::parse(
            "[mesh]\ntype = periodic-quad\nnx = 8\n\n[physics]\ngravity = 9.8 # comment\n",
        )
        .unwrap();
        assert_eq!(cfg.get("mesh.type"), Some("periodic-quad"));
        assert_eq!(cfg.f64_or("physics.gravity", 1.0).unwrap(), 9.8);
        assert_eq!(cfg.usize_or("mesh.ny", 4).unwrap(), 4);
    }

    #[test]
    fn rejects_unknown_key_with_name() {
        let err = Config::parse("[time]\ntimestep = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("timestep"), "{msg}");
    }

    #[test]
    fn rejects_unknown_section() {
        assert!(Config::parse("[turbulence]\nx = 1\n").is_err());
    }
}
