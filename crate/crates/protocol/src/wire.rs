//! Newline-delimited JSON wire protocol.
//!
//! One envelope per line, UTF-8, no raw newlines, at most
//! [`MAX_LINE_BYTES`] per line. Every envelope carries `kind`, `s_id`,
//! `protocol_version`, and a kind-specific `body`. Field elements ride as
//! decimal strings; proof payloads as base64; statement counts as plain
//! integers (they are small counts, and the audit database stores them as
//! integers too).

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zkmcp_core::circuit::PublicStatement;
use zkmcp_core::proof::ProofEnvelope;

pub const PROTOCOL_VERSION: &str = "zkmcp/1";
pub const MAX_LINE_BYTES: usize = 1 << 20;

/// Fixed serialization tokens occurring in `audit_request` lines; privacy
/// scans mask exactly these before searching for message bytes. Every entry
/// is a compiled-in constant, independent of session content.
pub const WIRE_SCHEMA_TOKENS: &[&str] = &[
    "\"kind\"",
    "\"audit_request\"",
    "\"s_id\"",
    "\"protocol_version\"",
    "\"zkmcp/1\"",
    "\"body\"",
    "\"statement\"",
    "\"counts\"",
    "\"hashes\"",
    "\"proof\"",
    "\"backend_id\"",
    "\"hash_params_id\"",
    "\"version\"",
    "\"payload\"",
    "\"submitter\"",
    "\"filler_count\"",
    "\"groth16-bn254\"",
    "\"insecure-oracle\"",
    "\"poseidon-bn254-x5-circom\"",
];

#[derive(Debug, Error)]
pub enum WireError {
    #[error("undecodable envelope: {0}")]
    Decode(String),
    #[error("unsupported protocol version {version:?}")]
    Version { s_id: String, version: String },
    #[error("line of {got} bytes exceeds the {max}-byte limit")]
    TooLong { got: usize, max: usize },
}

/// Audit decision carried in an `audit_result` envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Verified,
    Rejected,
}

/// A decoded wire envelope.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    SessionStart { s_id: String, initiator: String, peer: String },
    AuditRequest {
        s_id: String,
        statement: PublicStatement,
        proof: ProofEnvelope,
        submitter: String,
        filler_count: u64,
    },
    SessionClose { s_id: String },
    Ack { s_id: String },
    AuditResult { s_id: String, status: AuditStatus, reason: Option<String> },
    Error { s_id: String, code: String, message: String },
}

impl Envelope {
    pub fn s_id(&self) -> &str {
        match self {
            Envelope::SessionStart { s_id, .. }
            | Envelope::AuditRequest { s_id, .. }
            | Envelope::SessionClose { s_id }
            | Envelope::Ack { s_id }
            | Envelope::AuditResult { s_id, .. }
            | Envelope::Error { s_id, .. } => s_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Envelope::SessionStart { .. } => "session_start",
            Envelope::AuditRequest { .. } => "audit_request",
            Envelope::SessionClose { .. } => "session_close",
            Envelope::Ack { .. } => "ack",
            Envelope::AuditResult { .. } => "audit_result",
            Envelope::Error { .. } => "error",
        }
    }
}

#[derive(Deserialize)]
struct Frame {
    kind: String,
    s_id: String,
    protocol_version: String,
    body: serde_json::Value,
}

#[derive(Serialize)]
struct FrameOut<'a, T: Serialize> {
    kind: &'a str,
    s_id: &'a str,
    protocol_version: &'a str,
    body: T,
}

#[derive(Serialize, Deserialize)]
struct SessionStartBody {
    initiator: String,
    peer: String,
}

#[derive(Serialize, Deserialize)]
struct AuditRequestBody {
    statement: PublicStatement,
    proof: ProofEnvelope,
    submitter: String,
    filler_count: u64,
}

#[derive(Serialize, Deserialize)]
struct AuditResultBody {
    status: AuditStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ErrorBody {
    code: String,
    message: String,
}

/// Encodes an envelope as one line (without the trailing newline). Body
/// fields keep their declared order.
pub fn encode(envelope: &Envelope) -> String {
    fn frame<T: Serialize>(kind: &str, s_id: &str, body: T) -> String {
        let line = serde_json::to_string(&FrameOut {
            kind,
            s_id,
            protocol_version: PROTOCOL_VERSION,
            body,
        })
        .expect("frame serializes");
        debug_assert!(!line.contains('\n'));
        line
    }
    match envelope {
        Envelope::SessionStart { s_id, initiator, peer } => frame(
            envelope.kind(),
            s_id,
            SessionStartBody { initiator: initiator.clone(), peer: peer.clone() },
        ),
        Envelope::AuditRequest { s_id, statement, proof, submitter, filler_count } => frame(
            envelope.kind(),
            s_id,
            AuditRequestBody {
                statement: statement.clone(),
                proof: proof.clone(),
                submitter: submitter.clone(),
                filler_count: *filler_count,
            },
        ),
        Envelope::SessionClose { s_id } | Envelope::Ack { s_id } => {
            frame(envelope.kind(), s_id, serde_json::Map::new())
        }
        Envelope::AuditResult { s_id, status, reason } => frame(
            envelope.kind(),
            s_id,
            AuditResultBody { status: *status, reason: reason.clone() },
        ),
        Envelope::Error { s_id, code, message } => frame(
            envelope.kind(),
            s_id,
            ErrorBody { code: code.clone(), message: message.clone() },
        ),
    }
}

/// Decodes one line into an envelope.
pub fn decode(line: &str) -> Result<Envelope, WireError> {
    if line.len() > MAX_LINE_BYTES {
        return Err(WireError::TooLong { got: line.len(), max: MAX_LINE_BYTES });
    }
    let frame: Frame = serde_json::from_str(line).map_err(|e| WireError::Decode(e.to_string()))?;
    if frame.protocol_version != PROTOCOL_VERSION {
        return Err(WireError::Version { s_id: frame.s_id, version: frame.protocol_version });
    }
    let body = frame.body;
    let s_id = frame.s_id;
    match frame.kind.as_str() {
        "session_start" => {
            let b: SessionStartBody = parse_body(body)?;
            Ok(Envelope::SessionStart { s_id, initiator: b.initiator, peer: b.peer })
        }
        "audit_request" => {
            let b: AuditRequestBody = parse_body(body)?;
            Ok(Envelope::AuditRequest {
                s_id,
                statement: b.statement,
                proof: b.proof,
                submitter: b.submitter,
                filler_count: b.filler_count,
            })
        }
        "session_close" => Ok(Envelope::SessionClose { s_id }),
        "ack" => Ok(Envelope::Ack { s_id }),
        "audit_result" => {
            let b: AuditResultBody = parse_body(body)?;
            Ok(Envelope::AuditResult { s_id, status: b.status, reason: b.reason })
        }
        "error" => {
            let b: ErrorBody = parse_body(body)?;
            Ok(Envelope::Error { s_id, code: b.code, message: b.message })
        }
        other => Err(WireError::Decode(format!("unknown kind {other:?}"))),
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: serde_json::Value) -> Result<T, WireError> {
    serde_json::from_value(body).map_err(|e| WireError::Decode(format!("body: {e}")))
}
