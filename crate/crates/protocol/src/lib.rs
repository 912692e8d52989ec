//! Session lifecycle and audit protocol: the agent side (message recording,
//! post-session proof generation, retrying delivery), the audit-service side
//! (verification, registry, append-only audit and violation logs), and the
//! newline-delimited JSON wire protocol connecting them.

pub mod agent;
pub mod asp;
pub mod client;
pub mod records;
pub mod server;
pub mod state;
pub mod storage;
pub mod wire;

pub use agent::{Agent, AgentConfig, AgentError, AuditReceipt, BackoffPolicy, Direction};
pub use asp::{Asp, AspError, Event, Reply};
pub use client::{submit_once, Connection, TransportError};
pub use records::{AuditRecord, SessionRecord, SessionStats, Violation, INVALID_PROOF_REASON};
pub use server::{serve_asp, spawn, RunningServer, ServeError, ServerConfig};
pub use state::{decide, transition, EventKind, IllegalTransition, SessionState};
pub use storage::{load_jsonl, replay_outcomes, replay_sessions, AuditStore, JsonlStore};
pub use wire::{decode, encode, AuditStatus, Envelope, WireError, MAX_LINE_BYTES, PROTOCOL_VERSION};
