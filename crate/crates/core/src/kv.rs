//! Flat `key = value` text blocks with optional `[section]` headers.
//!
//! `#` starts a comment. Keys before the first header belong to an unnamed
//! leading section, which is always present (possibly empty). Errors carry
//! 1-based line numbers.

use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

pub fn parse(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section { name: None, line: 0, entries: vec![] }];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Config { line, msg: format!("malformed section header `{body}`") })?;
            sections.push(Section { name: Some(name.to_string()), line, entries: vec![] });
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config { line, msg: "empty key".into() });
        }
        let current = sections.last_mut().expect("leading section");
        if let Some(prev) = current.get(key) {
            return Err(Error::Config { line, msg: format!("duplicate key `{key}` (first set on line {})", prev.line) });
        }
        current.entries.push(Entry { key: key.to_string(), value: value.trim().to_string(), line });
    }
    Ok(sections)
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Parses `key` if present.
    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| Error::Config { line: e.line, msg: format!("cannot parse `{}` for `{key}`", e.value) }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.value(key)?.ok_or_else(|| Error::Config { line: self.line, msg: format!("missing key `{key}`") })
    }

    /// Comma-separated list under `key`, if present.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.get(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|_| Error::Config { line: e.line, msg: format!("cannot parse list item `{item}` for `{key}`") })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !known.contains(&e.key.as_str())) {
            Some(e) => Err(Error::Config { line: e.line, msg: format!("unknown key `{}`", e.key) }),
            None => Ok(()),
        }
    }

    pub fn error(&self, key: &str, msg: impl Into<String>) -> Error {
        let line = self.get(key).map_or(self.line, |e| e.line);
        Error::Config { line, msg: msg.into() }
    }
}
