//! Layered configuration: command-line flags over a `key=value` file (or a
//! replayed manifest) over built-in defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Result};

use crate::UsageError;

/// Values supplied by a config file or manifest, plus a record of every
/// value the command finally used.
#[derive(Debug, Default)]
pub struct Settings {
    source: String,
    file: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `name=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(UsageError(format!(
                "{origin}:{}: expected `name=value`, found `{line}`",
                i + 1
            )));
        };
        let key = normalize(k);
        if key.is_empty() {
            bail!(UsageError(format!("{origin}:{}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            bail!(UsageError(format!(
                "{origin}:{}: `{key}` given twice",
                i + 1
            )));
        }
    }
    Ok(out)
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let origin = path.display().to_string();
        Ok(Self::from_map(parse_key_values(&text, &origin)?, origin))
    }

    pub fn from_map(file: BTreeMap<String, String>, source: String) -> Self {
        Self {
            source,
            file: file.into_iter().map(|(k, v)| (normalize(&k), v)).collect(),
            resolved: RefCell::default(),
        }
    }

    fn parse<T: FromStr>(&self, key: &str, text: &str) -> Result<T>
    where
        T::Err: Display,
    {
        text.parse().map_err(|e| {
            UsageError(format!(
                "{}: invalid `{key}` value `{text}`: {e}",
                self.source
            ))
            .into()
        })
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn get<T: FromStr + Display>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let value = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(text)) => self.parse(key, text)?,
            (None, None) => default,
        };
        self.resolved
            .borrow_mut()
            .insert(key.into(), value.to_string());
        Ok(value)
    }

    /// Like [`get`](Self::get) for a setting with no default. An empty file
    /// value means unset.
    pub fn get_opt<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let value = match (flag, self.file.get(key).map(String::as_str)) {
            (Some(v), _) => Some(v),
            (None, Some("")) | (None, None) => None,
            (None, Some(text)) => Some(self.parse(key, text)?),
        };
        let shown = value.as_ref().map(ToString::to_string).unwrap_or_default();
        self.resolved.borrow_mut().insert(key.into(), shown);
        Ok(value)
    }

    /// A setting that must come from somewhere.
    pub fn require<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        self.get_opt(key, flag)?
            .ok_or_else(|| UsageError(format!("missing required setting `{key}`")).into())
    }

    /// Rejects file keys the command never asked for.
    pub fn finish(self) -> Result<BTreeMap<String, String>> {
        let resolved = self.resolved.into_inner();
        let unknown: BTreeSet<_> = self
            .file
            .keys()
            .filter(|k| !resolved.contains_key(*k))
            .collect();
        if !unknown.is_empty() {
            let names: Vec<_> = unknown.into_iter().cloned().collect();
            bail!(UsageError(format!(
                "{}: unknown setting(s): {}",
                self.source,
                names.join(", ")
            )));
        }
        Ok(resolved)
    }
}
