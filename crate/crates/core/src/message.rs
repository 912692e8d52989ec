//! The canonical audit-message format and the plaintext counting oracle.
//!
//! Every audited message is the canonical envelope of its type identifier:
//! the 10-byte prefix `{"type": "`, the type bytes, and the 2-byte suffix
//! `"}`. The layout is bit-exact — exactly one space after the colon and no
//! other whitespace — because the circuit checks byte positions, so
//! `total_len = type_len + 12` always holds.
//!
//! [`count_types`] is the plaintext oracle the circuit's public counts must
//! agree with.

use crate::params::{TypeTable, ENVELOPE_OVERHEAD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Envelope prefix: `{"type": "`.
pub const ENVELOPE_PREFIX: &[u8; 10] = b"{\"type\": \"";
/// Envelope suffix: `"}`.
pub const ENVELOPE_SUFFIX: &[u8; 2] = b"\"}";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MessageError {
    #[error("empty type identifier")]
    EmptyType,
    #[error("type identifier of {len} bytes exceeds the {max}-byte maximum")]
    TypeTooLong { len: usize, max: usize },
    #[error("illegal byte 0x{byte:02x} at index {index} of type identifier")]
    IllegalByte { index: usize, byte: u8 },
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(&'static str),
    #[error("message of {len} bytes exceeds the {max}-byte maximum")]
    TooLong { len: usize, max: usize },
    #[error("unknown type {0:?}")]
    UnknownType(String),
}

/// One canonical typed message with its extracted type and lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditMessage {
    /// Canonical envelope bytes (unpadded; length equals `total_len`).
    pub raw: Vec<u8>,
    /// The inner type identifier bytes.
    pub type_string: Vec<u8>,
    /// Envelope length: `type_len + 12`.
    pub total_len: usize,
    /// Type identifier length.
    pub type_len: usize,
    /// Milliseconds since the epoch at which the message was recorded.
    pub timestamp: u64,
}

impl AuditMessage {
    /// Builds the canonical message for a type identifier.
    pub fn from_type(
        type_string: &[u8],
        max_type: usize,
        timestamp: u64,
    ) -> Result<Self, MessageError> {
        let raw = canonicalize(type_string, max_type)?;
        Ok(Self {
            total_len: raw.len(),
            type_len: type_string.len(),
            raw,
            type_string: type_string.to_vec(),
            timestamp,
        })
    }

    /// Parses raw envelope bytes into a message.
    pub fn from_raw(
        raw: &[u8],
        max_json: usize,
        max_type: usize,
        timestamp: u64,
    ) -> Result<Self, MessageError> {
        let type_string = extract_type(raw, max_json, max_type)?;
        Ok(Self {
            raw: raw.to_vec(),
            total_len: raw.len(),
            type_len: type_string.len(),
            type_string,
            timestamp,
        })
    }

    /// Re-checks the canonical-form invariants on the stored fields.
    pub fn validate(&self, max_json: usize, max_type: usize) -> Result<(), MessageError> {
        let extracted = extract_type(&self.raw, max_json, max_type)?;
        if extracted != self.type_string
            || self.total_len != self.raw.len()
            || self.type_len != self.type_string.len()
            || self.total_len != self.type_len + ENVELOPE_OVERHEAD
        {
            return Err(MessageError::MalformedEnvelope("fields disagree with raw bytes"));
        }
        Ok(())
    }
}

/// Wraps a type identifier in the canonical envelope.
///
/// The output is `{"type": "` + `type_string` + `"}`, of length
/// `type_len + 12`.
pub fn canonicalize(type_string: &[u8], max_type: usize) -> Result<Vec<u8>, MessageError> {
    if type_string.is_empty() {
        return Err(MessageError::EmptyType);
    }
    if type_string.len() > max_type {
        return Err(MessageError::TypeTooLong { len: type_string.len(), max: max_type });
    }
    if let Some((index, &byte)) = type_string
        .iter()
        .enumerate()
        .find(|(_, &b)| !(0x20..=0x7e).contains(&b) || b == b'"' || b == b'}')
    {
        return Err(MessageError::IllegalByte { index, byte });
    }
    let mut raw = Vec::with_capacity(type_string.len() + ENVELOPE_OVERHEAD);
    raw.extend_from_slice(ENVELOPE_PREFIX);
    raw.extend_from_slice(type_string);
    raw.extend_from_slice(ENVELOPE_SUFFIX);
    Ok(raw)
}

/// Extracts the type identifier from canonical envelope bytes; the exact
/// inverse of [`canonicalize`] on its range.
pub fn extract_type(
    raw: &[u8],
    max_json: usize,
    max_type: usize,
) -> Result<Vec<u8>, MessageError> {
    if raw.len() > max_json {
        return Err(MessageError::MalformedEnvelope("longer than max_json"));
    }
    if raw.len() < ENVELOPE_OVERHEAD + 1 {
        return Err(MessageError::MalformedEnvelope("shorter than the minimal envelope"));
    }
    if &raw[..ENVELOPE_PREFIX.len()] != ENVELOPE_PREFIX {
        return Err(MessageError::MalformedEnvelope("prefix mismatch"));
    }
    if &raw[raw.len() - ENVELOPE_SUFFIX.len()..] != ENVELOPE_SUFFIX {
        return Err(MessageError::MalformedEnvelope("suffix mismatch"));
    }
    let inner = &raw[ENVELOPE_PREFIX.len()..raw.len() - ENVELOPE_SUFFIX.len()];
    if inner.len() > max_type {
        return Err(MessageError::MalformedEnvelope("type longer than max_type"));
    }
    for &b in inner {
        if b == b'"' || b == b'}' {
            return Err(MessageError::MalformedEnvelope("embedded quote or brace"));
        }
        if !(0x20..=0x7e).contains(&b) {
            return Err(MessageError::MalformedEnvelope("non-printable type byte"));
        }
    }
    Ok(inner.to_vec())
}

/// Pads a message with zero bytes to exactly `l` bytes. The original length
/// is carried separately as `total_len`.
pub fn pad_message(raw: &[u8], l: usize) -> Result<Vec<u8>, MessageError> {
    if raw.len() > l {
        return Err(MessageError::TooLong { len: raw.len(), max: l });
    }
    let mut padded = raw.to_vec();
    padded.resize(l, 0);
    Ok(padded)
}

/// Counts messages per table slot. This is the plaintext oracle the circuit's
/// public counts must match: `counts[j]` is the number of messages whose type
/// equals table entry `j`, and the counts sum to the message count.
pub fn count_types(messages: &[AuditMessage], table: &TypeTable) -> Result<Vec<u64>, MessageError> {
    let mut counts = vec![0u64; table.len()];
    for msg in messages {
        let j = table.index_of(&msg.type_string).ok_or_else(|| {
            MessageError::UnknownType(String::from_utf8_lossy(&msg.type_string).into_owned())
        })?;
        counts[j] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE};

    fn canon(t: &str) -> Vec<u8> {
        canonicalize(t.as_bytes(), DEFAULT_MAX_TYPE).unwrap()
    }

    #[test]
    fn canonicalize_request_is_19_bytes() {
        let raw = canon("request");
        assert_eq!(raw, b"{\"type\": \"request\"}");
        assert_eq!(raw.len(), 19);
    }

    #[test]
    fn canonicalize_rejects_empty() {
        assert_eq!(
            canonicalize(b"", DEFAULT_MAX_TYPE),
            Err(MessageError::EmptyType)
        );
    }

    #[test]
    fn canonicalize_twenty_byte_type_gives_32_byte_envelope() {
        let raw = canon("abcdefghijklmnopqrst");
        assert_eq!(raw.len(), 32);
    }

    #[test]
    fn canonicalize_rejects_21_bytes() {
        let err = canonicalize(b"abcdefghijklmnopqrstu", DEFAULT_MAX_TYPE);
        assert_eq!(err, Err(MessageError::TypeTooLong { len: 21, max: 20 }));
    }

    #[test]
    fn canonicalize_rejects_illegal_bytes() {
        assert!(matches!(
            canonicalize(b"a\"b", DEFAULT_MAX_TYPE),
            Err(MessageError::IllegalByte { index: 1, byte: b'"' })
        ));
        assert!(matches!(
            canonicalize(b"a\nb", DEFAULT_MAX_TYPE),
            Err(MessageError::IllegalByte { index: 1, .. })
        ));
    }

    #[test]
    fn extract_type_inverts_canonicalize() {
        let t = extract_type(&canon("response"), DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE).unwrap();
        assert_eq!(t, b"response");
    }

    #[test]
    fn extract_type_rejects_wrong_prefix() {
        let err = extract_type(b"{\"kind\": \"x\"}", DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE);
        assert!(matches!(err, Err(MessageError::MalformedEnvelope("prefix mismatch"))));
    }

    #[test]
    fn extract_type_rejects_oversized_raw() {
        let raw = vec![b'x'; 65];
        let err = extract_type(&raw, DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE);
        assert!(matches!(err, Err(MessageError::MalformedEnvelope("longer than max_json"))));
    }

    #[test]
    fn pad_message_appends_zero_bytes() {
        let raw = canon("request");
        let padded = pad_message(&raw, 64).unwrap();
        assert_eq!(padded.len(), 64);
        assert_eq!(&padded[..19], raw.as_slice());
        assert!(padded[19..].iter().all(|&b| b == 0));
    }

    #[test]
    fn pad_message_is_identity_at_full_length() {
        let raw = vec![1u8; 64];
        assert_eq!(pad_message(&raw, 64).unwrap(), raw);
    }

    #[test]
    fn pad_message_rejects_overlong() {
        let raw = vec![1u8; 65];
        assert_eq!(pad_message(&raw, 64), Err(MessageError::TooLong { len: 65, max: 64 }));
    }

    #[test]
    fn count_types_counts_per_slot() {
        let table = TypeTable::default_table();
        let mut msgs = Vec::new();
        for _ in 0..3 {
            msgs.push(AuditMessage::from_type(b"request", 20, 0).unwrap());
        }
        for _ in 0..5 {
            msgs.push(AuditMessage::from_type(b"response", 20, 0).unwrap());
        }
        let counts = count_types(&msgs, &table).unwrap();
        assert_eq!(counts, vec![3, 5, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn count_types_of_nothing_is_all_zero() {
        let table = TypeTable::default_table();
        assert_eq!(count_types(&[], &table).unwrap(), vec![0; 8]);
    }

    #[test]
    fn count_types_rejects_unknown_type() {
        let table = TypeTable::default_table();
        let msg = AuditMessage::from_type(b"mystery", 20, 0).unwrap();
        assert!(matches!(
            count_types(&[msg], &table),
            Err(MessageError::UnknownType(_))
        ));
    }

    #[test]
    fn validate_catches_tampered_raw() {
        let mut msg = AuditMessage::from_type(b"ping", 20, 0).unwrap();
        assert!(msg.validate(DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE).is_ok());
        msg.raw[0] = b'[';
        assert!(msg.validate(DEFAULT_MAX_JSON, DEFAULT_MAX_TYPE).is_err());
    }
}
