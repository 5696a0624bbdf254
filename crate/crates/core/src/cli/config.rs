//! Flat `key = value` configuration with flag overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key accepted in config files and as `--key value` flags.
pub const KEYS: &[&str] = &[
    "geometry",
    "bc",
    "kind",
    "n",
    "n_list",
    "lo",
    "hi",
    "res",
    "s0",
    "s1",
    "s0_min",
    "s0_max",
    "s1_min",
    "s1_max",
    "s0_res",
    "s1_res",
    "m",
    "M",
    "b_norm",
    "b",
    "trace_norm",
    "c_p",
    "robin_coeff_mode",
    "seed",
    "trials",
    "side",
    "f",
    "degree",
    "check_res",
    "out",
];

/// Raw values merged from file and flags, plus the record of what each command resolved.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Keys and values as used by the command, defaults included.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Config(format!("cannot parse {key} = '{v}'")))
    }

    pub fn get<T: FromStr + ToString>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.get(key).cloned() {
            None => Ok(None),
            Some(v) => {
                let t: T = Self::parse_value(key, &v)?;
                self.record(key, &v);
                Ok(Some(t))
            }
        }
    }

    pub fn require<T: FromStr + ToString>(&mut self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn get_or<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T> {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.values.get(key).cloned() {
            None => Ok(None),
            Some(v) => {
                let items = v
                    .split(',')
                    .map(|s| Self::parse_value(key, s.trim()))
                    .collect::<Result<Vec<T>>>()?;
                self.record(key, &v);
                Ok(Some(items))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = RunConfig::parse("# comment\nn = 2\nlo = 0, 1  # trailing\n\ns0=10\n").unwrap();
        assert_eq!(c.require::<usize>("n").unwrap(), 2);
        assert_eq!(c.list::<f64>("lo").unwrap().unwrap(), vec![0.0, 1.0]);
        c.set("s0", "3").unwrap();
        assert_eq!(c.require::<f64>("s0").unwrap(), 3.0);
        assert_eq!(c.get_or("seed", 7u64).unwrap(), 7);
        assert_eq!(c.resolved().get("seed").unwrap(), "7");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("nonsense").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        let mut c = RunConfig::parse("n = two").unwrap();
        assert!(c.require::<usize>("n").is_err());
        assert!(c.require::<f64>("s0").is_err());
    }
}
