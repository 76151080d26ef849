//! `key=value` configuration files.
//!
//! One entry per line; blank lines and lines starting with `#` are ignored.
//! Keys are case-sensitive. A later entry for the same key overrides an
//! earlier one, which lets command-line flags be appended on top of a file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(idx + 1, format!("expected key=value, got {line:?}")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::format(idx + 1, "empty key"));
            }
            cfg.set(key, value.trim());
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Typed lookup. Missing keys yield `Ok(None)`; unparsable values are a
    /// parameter error naming the key.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => parse_value(raw)
                .map(Some)
                .ok_or_else(|| Error::param(format!("invalid value for {key}: {raw:?}"))),
        }
    }

    /// Overwrite `slot` if `key` is present.
    pub fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Entries whose key starts with `prefix.`, with the prefix stripped.
    pub fn scoped(&self, prefix: &str) -> KvConfig {
        let lead = format!("{prefix}.");
        KvConfig {
            entries: self
                .entries
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&lead).map(|rest| (rest.to_string(), v.clone())))
                .collect(),
        }
    }

    pub fn merge(&mut self, other: &KvConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// Integers may be written in hex (`0x...`) or with `KiB`/`MiB`/`GiB`
// suffixes; everything else goes through `FromStr`.
fn parse_value<T: FromStr>(raw: &str) -> Option<T> {
    if let Ok(v) = raw.parse::<T>() {
        return Some(v);
    }
    let expanded = expand_integer(raw)?;
    expanded.to_string().parse::<T>().ok()
}

fn expand_integer(raw: &str) -> Option<u64> {
    let s = raw.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        return u64::from_str_radix(hex, 16).ok();
    }
    let (digits, shift) = if let Some(d) = s.strip_suffix("KiB") {
        (d, 10)
    } else if let Some(d) = s.strip_suffix("MiB") {
        (d, 20)
    } else if let Some(d) = s.strip_suffix("GiB") {
        (d, 30)
    } else {
        return None;
    };
    digits.trim().parse::<u64>().ok()?.checked_mul(1 << shift)
}

/// Parse a boolean flag value (`1/0`, `true/false`, `on/off`, `yes/no`).
pub fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Some(true),
        "0" | "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

impl KvConfig {
    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => parse_bool(raw)
                .map(Some)
                .ok_or_else(|| Error::param(format!("invalid boolean for {key}: {raw:?}"))),
        }
    }
}
