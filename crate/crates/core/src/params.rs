//! Circuit dimensions and the known-type table.
//!
//! A session circuit is sized by [`CircuitParams`]: `n` messages, each padded
//! to `max_json` bytes, with type identifiers of at most `max_type` bytes
//! matched against the `num_types` entries of a [`TypeTable`]. The table is
//! baked into the circuit as constants, so its digest identifies a circuit
//! build.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Default maximum padded message length in bytes.
pub const DEFAULT_MAX_JSON: usize = 64;
/// Default maximum type-identifier length in bytes.
pub const DEFAULT_MAX_TYPE: usize = 20;
/// Default number of known message types.
pub const DEFAULT_NUM_TYPES: usize = 8;

/// Fixed canonical-envelope overhead: `{"type": "` plus `"}`.
pub const ENVELOPE_OVERHEAD: usize = 12;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),
    #[error("invalid type table: {0}")]
    InvalidTable(String),
    #[error("type table config: {0}")]
    Config(String),
}

/// Dimensions of one audit circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Messages per session (and per circuit).
    pub n: usize,
    /// Padded message length in bytes.
    pub max_json: usize,
    /// Maximum type-identifier length in bytes.
    pub max_type: usize,
    /// Number of known types (the length of the counts output).
    pub num_types: usize,
}

impl CircuitParams {
    /// Parameters for an `n`-message circuit with the default dimensions.
    pub fn new(n: usize) -> Result<Self, ParamsError> {
        Self::with_dims(n, DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE, DEFAULT_NUM_TYPES)
    }

    pub fn with_dims(
        n: usize,
        max_json: usize,
        max_type: usize,
        num_types: usize,
    ) -> Result<Self, ParamsError> {
        if n == 0 {
            return Err(ParamsError::InvalidParams("n must be at least 1".into()));
        }
        if max_type == 0 || num_types == 0 {
            return Err(ParamsError::InvalidParams(
                "max_type and num_types must be positive".into(),
            ));
        }
        if ENVELOPE_OVERHEAD + max_type > max_json {
            return Err(ParamsError::InvalidParams(format!(
                "canonical envelope does not fit: 12 + {max_type} > {max_json}"
            )));
        }
        Ok(Self { n, max_json, max_type, num_types })
    }
}

/// The ordered table of known message types. Entry `j` defines slot `j` of
/// the public counts output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTable {
    entries: Vec<String>,
    max_type: usize,
}

/// On-disk form of the type table config: `{"types": [...]}`.
#[derive(Serialize, Deserialize)]
struct TableConfig {
    types: Vec<String>,
}

impl TypeTable {
    /// Builds a table, validating every entry: 1..=max_type bytes of printable
    /// ASCII, no `"` or `}`, all entries distinct.
    pub fn new(entries: Vec<String>, max_type: usize) -> Result<Self, ParamsError> {
        if entries.is_empty() {
            return Err(ParamsError::InvalidTable("table must not be empty".into()));
        }
        for entry in &entries {
            validate_type_entry(entry.as_bytes(), max_type)
                .map_err(|e| ParamsError::InvalidTable(format!("entry {entry:?}: {e}")))?;
        }
        for (i, a) in entries.iter().enumerate() {
            if entries[..i].contains(a) {
                return Err(ParamsError::InvalidTable(format!("duplicate entry {a:?}")));
            }
        }
        Ok(Self { entries, max_type })
    }

    /// The default eight-type table.
    pub fn default_table() -> Self {
        let entries = [
            "request",
            "response",
            "notification",
            "error",
            "ping",
            "progress",
            "cancelled",
            "result",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        Self::new(entries, DEFAULT_MAX_TYPE).expect("default table is valid")
    }

    /// Loads a table from a JSON config file `{"types": [...]}` with exactly
    /// [`DEFAULT_NUM_TYPES`] entries; order is significant.
    pub fn from_config_path(path: &Path) -> Result<Self, ParamsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParamsError::Config(format!("read {}: {e}", path.display())))?;
        Self::from_config_str(&text)
    }

    pub fn from_config_str(text: &str) -> Result<Self, ParamsError> {
        let cfg: TableConfig =
            serde_json::from_str(text).map_err(|e| ParamsError::Config(e.to_string()))?;
        if cfg.types.len() != DEFAULT_NUM_TYPES {
            return Err(ParamsError::Config(format!(
                "expected exactly {DEFAULT_NUM_TYPES} types, got {}",
                cfg.types.len()
            )));
        }
        Self::new(cfg.types, DEFAULT_MAX_TYPE)
    }

    pub fn to_config_string(&self) -> String {
        serde_json::to_string_pretty(&TableConfig { types: self.entries.clone() })
            .expect("table serializes")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_type(&self) -> usize {
        self.max_type
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> &str {
        &self.entries[j]
    }

    /// Slot index of a type, if known.
    pub fn index_of(&self, type_bytes: &[u8]) -> Option<usize> {
        self.entries.iter().position(|e| e.as_bytes() == type_bytes)
    }

    pub fn contains(&self, type_bytes: &[u8]) -> bool {
        self.index_of(type_bytes).is_some()
    }

    /// Hex digest binding the table contents and order; a circuit built from
    /// this table embeds it in its metadata.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for entry in &self.entries {
            hasher.update(entry.as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(hasher.finalize())
    }
}

/// Checks one type identifier: non-empty, within `max_type`, printable ASCII,
/// and free of `"` and `}` so the canonical envelope needs no escaping.
pub fn validate_type_entry(bytes: &[u8], max_type: usize) -> Result<(), String> {
    if bytes.is_empty() {
        return Err("empty type".into());
    }
    if bytes.len() > max_type {
        return Err(format!("length {} exceeds max {}", bytes.len(), max_type));
    }
    for (i, &b) in bytes.iter().enumerate() {
        if !(0x20..=0x7e).contains(&b) {
            return Err(format!("non-printable byte 0x{b:02x} at index {i}"));
        }
        if b == b'"' || b == b'}' {
            return Err(format!("forbidden byte {:?} at index {i}", b as char));
        }
    }
    Ok(())
}
