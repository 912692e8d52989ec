//! Core building blocks for privacy-preserving session audits: the canonical
//! audit-message model, Poseidon-based message digests, the arithmetic
//! constraint system that validates and counts typed messages, and the
//! (Setup, Prove, Verify) proof system wrapped around it.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`] — circuit dimensions and the known-type table
//! - [`message`] — canonical envelope bytes and the plaintext counting oracle
//! - [`field`] — scalar-field helpers (decimal serialization)
//! - [`hashing`] — byte packing and the Poseidon permutation/digest
//! - [`r1cs`] — sparse rank-1 constraint machinery
//! - [`circuit`] — the audit circuit builder and witness synthesis
//! - [`proof`] — proving/verifying backends and key management

pub mod circuit;
pub mod field;
pub mod hashing;
pub mod message;
pub mod params;
pub mod privacy;
pub mod proof;
pub mod r1cs;

pub use circuit::{
    build_circuit, check_relation, synthesize_witness, CircuitError, CircuitMeta,
    ConstraintSystem, PublicStatement, Witness,
};
pub use field::Fr;
pub use hashing::{message_digest, pack_bytes, poseidon, HashError, PackedMessage};
pub use message::{
    canonicalize, count_types, extract_type, pad_message, AuditMessage, MessageError,
};
pub use params::{CircuitParams, ParamsError, TypeTable};
pub use proof::{
    load_crs, save_crs, setup, BackendKind, CrsBundle, ProofBundle, ProofEnvelope, ProofError,
    Prover, Verifier,
};
