//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are matched
//! case-insensitively with `-` and `_` treated alike, and a few short aliases
//! (`T`, `N`, `K`, `S0`) map to their long names.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

fn canonical(key: &str) -> String {
    let key = key.trim().to_ascii_lowercase().replace('-', "_");
    match key.as_str() {
        "t" => "maturity".into(),
        "n" => "steps".into(),
        "k" => "strike".into(),
        _ => key,
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", no + 1))?;
            values.insert(canonical(k), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Parsed value for `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(&canonical(key)) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| format!("config key `{key}`: cannot parse `{raw}`: {e}")),
        }
    }

    /// Comma-separated list for `key`, if present.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(&canonical(key)) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| format!("config key `{key}`: cannot parse `{s}`: {e}"))
                })
                .collect::<Result<Vec<T>, String>>()
                .map(Some),
        }
    }

    /// `first` if set, otherwise the file value, otherwise `default`.
    pub fn layer<T: FromStr>(&self, first: Option<T>, key: &str, default: T) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        match first {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`ConfigFile::layer`] without a default.
    pub fn layer_opt<T: FromStr>(&self, first: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match first {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn layer_list<T: FromStr>(
        &self,
        first: Option<Vec<T>>,
        key: &str,
        default: Vec<T>,
    ) -> Result<Vec<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match first {
            Some(v) => Ok(v),
            None => Ok(self.get_list(key)?.unwrap_or(default)),
        }
    }
}
