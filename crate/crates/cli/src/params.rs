//! Experiment parameters merged from a sectioned key-value config file and
//! command-line overrides (overrides win).

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct Params {
    map: BTreeMap<String, String>,
}

/// Usage-level error: bad flags, bad config, unknown keys. Exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Params {
    /// Read the `[section]` block of a config file: one `key = value` per
    /// line, `#` comments, blank lines ignored.
    pub fn load_section(path: &Path, section: &str) -> Result<Params, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        let mut in_section = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                in_section = name.trim() == section;
                continue;
            }
            if !in_section {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("config line {}: expected `key = value`", ln + 1))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params { map })
    }

    /// Apply `--key value` override pairs on top of config values.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), UsageError> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| UsageError(format!("expected `--key value`, got `{flag}`")))?;
            let value = it
                .next()
                .ok_or_else(|| UsageError(format!("flag --{key} is missing a value")))?;
            self.map.insert(key.to_string(), value.clone());
        }
        Ok(())
    }

    /// Reject keys the experiment does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), UsageError> {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(UsageError(format!(
                    "unknown key `{k}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, UsageError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| UsageError(format!("key `{key}`: `{v}` is not a number"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, UsageError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| UsageError(format!("key `{key}`: `{v}` is not an integer"))),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, UsageError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| UsageError(format!("key `{key}`: `{v}` is not an integer"))),
        }
    }
}
