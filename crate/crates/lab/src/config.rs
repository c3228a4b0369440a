//! Flat `key = value` experiment configuration.
//!
//! Keys may carry a section prefix either inline (`grid.nodes = 513`) or
//! through a `[grid]` header that prefixes every following key. `#` starts a
//! comment. Lists are comma separated.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn err(line: usize, msg: &str) -> LabError {
    LabError::Config(format!("line {line}: {msg}"))
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, LabError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(k + 1, "unterminated section header"))?.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(k + 1, "bad section name"));
                }
                section = format!("{name}.");
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(k + 1, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err(k + 1, "bad key"));
            }
            let full = format!("{section}{key}");
            if entries.insert(full.clone(), value.to_string()).is_some() {
                return Err(err(k + 1, &format!("duplicate key {full}")));
            }
        }
        if entries.is_empty() {
            return Err(LabError::Config("empty config".into()));
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Config, LabError> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Config {
        Config { entries: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, LabError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| LabError::Config(format!("{key}: cannot parse {s:?}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, LabError> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(LabError::Config(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, LabError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, LabError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Nonempty comma-separated list of finite numbers.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, LabError> {
        let Some(s) = self.get(key) else { return Ok(default.to_vec()) };
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| LabError::Config(format!("{key}: cannot parse list {s:?}")))?;
        if v.is_empty() {
            return Err(LabError::Config(format!("{key}: empty list")));
        }
        Ok(v)
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn provenance_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let c = Config::parse("experiment = covering # trailing\n\n[grid]\nnodes=1025\nhalf_width = 0.5\n[cover]\nscales = 0.125, 0.0625\n").unwrap();
        assert_eq!(c.get("experiment"), Some("covering"));
        assert_eq!(c.usize_or("grid.nodes", 0).unwrap(), 1025);
        assert_eq!(c.f64_or("grid.half_width", 0.0).unwrap(), 0.5);
        assert_eq!(c.list_or("cover.scales", &[]).unwrap(), vec![0.125, 0.0625]);
        assert_eq!(c.f64_or("missing", 3.0).unwrap(), 3.0);
    }

    #[test]
    fn rejects_empty_and_malformed() {
        assert!(matches!(Config::parse(""), Err(LabError::Config(_))));
        assert!(matches!(Config::parse("# only a comment\n"), Err(LabError::Config(_))));
        assert!(Config::parse("novalue\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        assert!(Config::parse("[grid\nnodes = 3\n").is_err());
        assert!(Config::parse("x = abc\n").unwrap().f64_or("x", 0.0).is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = Config::parse("experiment=x\n[grid]\nnodes = 5").unwrap();
        let b = Config::parse("experiment = x\n# c\ngrid.nodes=5\n").unwrap();
        assert_eq!(a.provenance_hash(), b.provenance_hash());
        assert_eq!(a.provenance_hash().len(), 64);
        let c = Config::parse("experiment = x\ngrid.nodes = 6\n").unwrap();
        assert_ne!(a.provenance_hash(), c.provenance_hash());
    }
}
