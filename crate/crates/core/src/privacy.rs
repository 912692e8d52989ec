//! Structural privacy scanning.
//!
//! Serialized proofs and audit traffic must not contain any byte substring of
//! the raw messages they commit to. The scan here is byte-level and
//! exhaustive over all windows of a minimum length, with one carve-out: the
//! serialization schema's own fixed tokens (field names, kind tags, backend
//! identifiers) are masked out first. Those tokens are compiled-in constants,
//! identical for every session regardless of content, so a match inside one
//! carries no witness information — for example the default type `request`
//! is a substring of the wire kind tag `audit_request`, and `ion"` from
//! `notification"` occurs inside the field name `version"`.
//!
//! Masking uses a NUL byte, which canonical messages can never contain, so
//! masking cannot manufacture false negatives inside values.

/// Minimum window length the audit scans use.
pub const MIN_LEAK_WINDOW: usize = 4;

/// Fixed serialization tokens of proof bundles. Data-independent by
/// construction.
pub const BUNDLE_SCHEMA_TOKENS: &[&str] = &[
    "\"proof\"",
    "\"backend_id\"",
    "\"hash_params_id\"",
    "\"version\"",
    "\"payload\"",
    "\"statement\"",
    "\"counts\"",
    "\"hashes\"",
    "\"s_id\"",
    "\"created_at\"",
    "\"groth16-bn254\"",
    "\"insecure-oracle\"",
    "\"poseidon-bn254-x5-circom\"",
];

/// One detected leak: a window of a raw message found in the haystack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leak {
    /// Index of the offending message in the scanned set.
    pub message_index: usize,
    /// Offset of the match in the (masked) haystack.
    pub position: usize,
    /// The matched window bytes.
    pub window: Vec<u8>,
}

/// Replaces every occurrence of the fixed tokens with NUL bytes.
pub fn mask_tokens(haystack: &[u8], tokens: &[&str]) -> Vec<u8> {
    let mut masked = haystack.to_vec();
    for token in tokens {
        let needle = token.as_bytes();
        if needle.is_empty() {
            continue;
        }
        let mut from = 0;
        while from + needle.len() <= masked.len() {
            if &masked[from..from + needle.len()] == needle {
                masked[from..from + needle.len()].fill(0);
                from += needle.len();
            } else {
                from += 1;
            }
        }
    }
    masked
}

/// Scans `haystack` for every window of length `>= min_window` of every raw
/// message. Scanning all minimum-length windows is equivalent: any longer
/// match contains one.
pub fn find_leaks(haystack: &[u8], raw_messages: &[&[u8]], min_window: usize) -> Vec<Leak> {
    let mut leaks = Vec::new();
    for (message_index, raw) in raw_messages.iter().enumerate() {
        if raw.len() < min_window {
            continue;
        }
        for window in raw.windows(min_window) {
            if let Some(position) = find(haystack, window) {
                leaks.push(Leak { message_index, position, window: window.to_vec() });
            }
        }
    }
    leaks
}

/// Masks the fixed tokens, then scans.
pub fn find_leaks_masked(
    haystack: &[u8],
    raw_messages: &[&[u8]],
    tokens: &[&str],
) -> Vec<Leak> {
    let masked = mask_tokens(haystack, tokens);
    find_leaks(&masked, raw_messages, MIN_LEAK_WINDOW)
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}
