//! A minimal `key = value` text format.
//!
//! Used for every non-CSV artifact the pipeline writes: descriptor tables,
//! checkpoints, transfer reports, and run configs. One entry per line,
//! `#` comments and blank lines ignored, keys unique, entry order preserved.
//! Floats are written with Rust's shortest-roundtrip `Display`, so a
//! write/read cycle reproduces every `f64` bit-for-bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut doc = KvDoc::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = (i + 1) as u64;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(path, lineno, format!("expected `key = value`, got {raw:?}")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(path, lineno, "empty key"));
            }
            if doc.index.contains_key(key) {
                return Err(Error::parse(path, lineno, format!("duplicate key {key:?}")));
            }
            doc.push(key, value.trim());
        }
        Ok(doc)
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        debug_assert!(!self.index.contains_key(&key), "duplicate key {key:?}");
        self.index.insert(key.clone(), self.entries.len());
        self.entries.push((key, value.into()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, v: f64) {
        self.push(key, fmt_f64(v));
    }

    pub fn push_f64s(&mut self, key: impl Into<String>, vs: &[f64]) {
        self.push(key, fmt_f64s(vs));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.index.get(key).map(|&i| self.entries[i].1.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Data(format!("missing key {key:?}")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?).map_err(|e| Error::Data(format!("key {key:?}: {e}")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Data(format!("key {key:?}: bad integer {raw:?}")))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Data(format!("key {key:?}: bad integer {raw:?}")))
    }

    pub fn require_bool(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Data(format!("key {key:?}: bad bool {other:?}"))),
        }
    }

    pub fn require_f64s(&self, key: &str) -> Result<Vec<f64>> {
        parse_f64s(self.require(key)?).map_err(|e| Error::Data(format!("key {key:?}: {e}")))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_f64s(vs: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

pub fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("bad number {s:?}"))
}

/// Numbers separated by whitespace and/or commas.
pub fn parse_f64s(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(parse_f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.kv")
    }

    #[test]
    fn parse_basics() {
        let doc = KvDoc::parse_str("# comment\na = 1\n\nb = two words = with equals\n", &p()).unwrap();
        assert_eq!(doc.get("a"), Some("1"));
        assert_eq!(doc.get("b"), Some("two words = with equals"));
        assert_eq!(doc.entries().len(), 2);
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = KvDoc::parse_str("a = 1\na = 2\n", &p()).unwrap_err();
        assert!(err.to_string().contains("duplicate key"), "{err}");
    }

    #[test]
    fn missing_equals_rejected() {
        let err = KvDoc::parse_str("just a line\n", &p()).unwrap_err();
        assert!(err.to_string().contains("test.kv:1"), "{err}");
    }

    #[test]
    fn f64_roundtrip_is_bit_exact() {
        let values = [
            0.1,
            -1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
            6.02214076e23,
            -0.0,
            1e-300,
            2390.4999999999995,
        ];
        let mut doc = KvDoc::new();
        doc.push_f64s("v", &values);
        let back = KvDoc::parse_str(&doc.render(), &p()).unwrap();
        let parsed = back.require_f64s("v").unwrap();
        assert_eq!(parsed.len(), values.len());
        for (a, b) in values.iter().zip(&parsed) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
        }
    }

    #[test]
    fn list_accepts_commas_and_whitespace() {
        assert_eq!(parse_f64s("1, 2,3  4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse_f64s("1, x").is_err());
    }
}
