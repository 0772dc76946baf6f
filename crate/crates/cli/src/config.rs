//! Numeric defaults, optionally overlaid from a TOML file and then from
//! command-line flags.

use crate::UsageError;
use serde::Serialize;
use std::path::Path;

pub const VALID_KEYS: [&str; 4] = ["K", "N", "N_q", "cutoff"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numeric {
    #[serde(rename = "K")]
    pub k: usize,
    /// `None` means automatic truncation.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "N_q")]
    pub n_q: usize,
    pub cutoff: f64,
}

impl Default for Numeric {
    fn default() -> Self {
        Self {
            k: 4096,
            n: None,
            n_q: 64,
            cutoff: 1e-12,
        }
    }
}

fn key_of_line(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    Some(key.trim().trim_matches('"').to_string())
}

fn malformed(key: &str, detail: impl std::fmt::Display) -> UsageError {
    UsageError::Config(format!("malformed value for key `{key}`: {detail}"))
}

fn positive_int(key: &str, v: &toml::Value) -> Result<usize, UsageError> {
    match v {
        toml::Value::Integer(i) if *i > 0 => Ok(*i as usize),
        other => Err(malformed(
            key,
            format!("expected a positive integer, got {other}"),
        )),
    }
}

impl Numeric {
    /// Parses config text and overlays it on the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, UsageError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            match e.span().and_then(|s| key_of_line(text, s.start)) {
                Some(key) if !key.is_empty() => malformed(&key, e.message()),
                _ => UsageError::Config(e.message().to_string()),
            }
        })?;
        let mut out = Self::default();
        for (key, value) in &table {
            match key.as_str() {
                "K" => out.k = positive_int(key, value)?,
                "N_q" => out.n_q = positive_int(key, value)?,
                "N" => {
                    out.n = match value {
                        toml::Value::String(s) if s == "auto" => None,
                        v => Some(positive_int(key, v)?),
                    }
                }
                "cutoff" => {
                    out.cutoff = match value {
                        toml::Value::Float(x) => *x,
                        toml::Value::Integer(i) => *i as f64,
                        other => {
                            return Err(malformed(key, format!("expected a number, got {other}")))
                        }
                    };
                    if !(out.cutoff > 0.0 && out.cutoff < 1.0) {
                        return Err(malformed(
                            key,
                            format!("must lie in (0, 1), got {}", out.cutoff),
                        ));
                    }
                }
                other => {
                    return Err(UsageError::Config(format!(
                        "unknown key `{other}`; valid keys are {}",
                        VALID_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies flag values on top of `self`.
    pub fn overlay(
        mut self,
        k: Option<usize>,
        n: Option<usize>,
        n_q: Option<usize>,
        cutoff: Option<f64>,
    ) -> Self {
        if let Some(k) = k {
            self.k = k;
        }
        if n.is_some() {
            self.n = n;
        }
        if let Some(q) = n_q {
            self.n_q = q;
        }
        if let Some(c) = cutoff {
            self.cutoff = c;
        }
        self
    }
}
