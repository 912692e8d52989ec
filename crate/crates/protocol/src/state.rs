//! The session/audit state machine.
//!
//! Six states, three inbound event kinds. The legal transitions are exactly:
//!
//! - `INIT` or `SESSION_CLOSED` --Session-Start--> `SESSION_ACTIVE`
//! - `SESSION_ACTIVE` or `SESSION_CLOSED` --Audit-Request--> `AUDIT_PENDING`
//! - `AUDIT_PENDING` --decision--> `AUDIT_VERIFIED` | `AUDIT_REJECTED`
//! - `SESSION_ACTIVE`, `AUDIT_VERIFIED`, or `AUDIT_REJECTED`
//!   --Session-Close--> `SESSION_CLOSED`
//!
//! Every other (state, event) pair is an illegal transition. The decision
//! step is internal to audit handling, not an inbound event.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Init,
    SessionActive,
    AuditPending,
    AuditVerified,
    AuditRejected,
    SessionClosed,
}

impl SessionState {
    pub const ALL: [SessionState; 6] = [
        SessionState::Init,
        SessionState::SessionActive,
        SessionState::AuditPending,
        SessionState::AuditVerified,
        SessionState::AuditRejected,
        SessionState::SessionClosed,
    ];
}

/// Inbound protocol events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SessionStart,
    AuditRequest,
    SessionClose,
}

impl EventKind {
    pub const ALL: [EventKind; 3] =
        [EventKind::SessionStart, EventKind::AuditRequest, EventKind::SessionClose];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal transition: {event:?} in state {state:?}")]
pub struct IllegalTransition {
    pub state: SessionState,
    pub event: EventKind,
}

/// Applies an inbound event to a state.
pub fn transition(
    state: SessionState,
    event: EventKind,
) -> Result<SessionState, IllegalTransition> {
    use EventKind::*;
    use SessionState::*;
    match (state, event) {
        (Init | SessionClosed, SessionStart) => Ok(SessionActive),
        (SessionActive | SessionClosed, AuditRequest) => Ok(AuditPending),
        (SessionActive | AuditVerified | AuditRejected, SessionClose) => Ok(SessionClosed),
        _ => Err(IllegalTransition { state, event }),
    }
}

/// Resolves a pending audit to its decided state.
pub fn decide(verified: bool) -> SessionState {
    if verified {
        SessionState::AuditVerified
    } else {
        SessionState::AuditRejected
    }
}
