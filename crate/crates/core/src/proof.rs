//! The (Setup, Prove, Verify) triple over the audit circuit.
//!
//! Two backends sit behind the same contract: a pairing-based SNARK with a
//! per-circuit trusted setup (Groth16 over BN254), and an explicitly insecure
//! relation-oracle backend whose "proof" is just a tagged transcript of the
//! statement. The oracle backend exists so protocol and transport suites can
//! run fast and deterministically; services must refuse it unless explicitly
//! allowed.
//!
//! Proofs and keys travel as backend-opaque bytes inside a self-describing
//! envelope; statements ride as decimal strings. A prover refuses to prove a
//! statement the relation does not satisfy, so honest-agent bugs surface at
//! the agent rather than at the verifier.

use crate::circuit::{
    build_circuit, check_relation, synthesize_witness, CircuitError, CircuitMeta,
    ConstraintSystem, PublicStatement, Witness,
};
use crate::field::Fr;
use crate::hashing::HASH_PARAMS_ID;
use crate::message::AuditMessage;
use crate::params::{CircuitParams, TypeTable};
use crate::r1cs::Lc;
use ark_bn254::Bn254;
use ark_groth16::{Groth16, PreparedVerifyingKey, Proof, ProvingKey, VerifyingKey};
use ark_relations::r1cs::{
    ConstraintSynthesizer, ConstraintSystemRef, LinearCombination, SynthesisError, Variable,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use ark_snark::SNARK;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Identifier of the production backend.
pub const GROTH16_BACKEND_ID: &str = "groth16-bn254";
/// Identifier of the development-only relation-oracle backend.
pub const ORACLE_BACKEND_ID: &str = "insecure-oracle";
/// Envelope format version.
pub const PROOF_ENVELOPE_VERSION: u32 = 1;

const ORACLE_TRANSCRIPT_TAG: &str = "insecure-oracle-transcript/1\n";

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("statement is not satisfied by the witness; refusing to prove")]
    RelationUnsatisfied,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("key material does not match this circuit: {0}")]
    CrsMismatch(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("key storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serialization(String),
}

/// Backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Pairing-based SNARK with per-circuit trusted setup.
    Groth16,
    /// Development-only oracle that replays `check_relation`; offers no
    /// soundness against a dishonest prover.
    InsecureOracle,
}

impl BackendKind {
    pub fn id(&self) -> &'static str {
        match self {
            BackendKind::Groth16 => GROTH16_BACKEND_ID,
            BackendKind::InsecureOracle => ORACLE_BACKEND_ID,
        }
    }

    pub fn from_id(id: &str) -> Result<Self, ProofError> {
        match id {
            GROTH16_BACKEND_ID => Ok(BackendKind::Groth16),
            ORACLE_BACKEND_ID => Ok(BackendKind::InsecureOracle),
            other => Err(ProofError::BackendUnavailable(other.to_string())),
        }
    }
}

/// The common reference string plus everything needed to interpret it:
/// circuit metadata, hash parameter set, and backend identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrsBundle {
    pub backend_id: String,
    pub hash_params_id: String,
    pub circuit_meta: CircuitMeta,
    #[serde(with = "base64_bytes")]
    pub proving_key: Vec<u8>,
    #[serde(with = "base64_bytes")]
    pub verification_key: Vec<u8>,
}

impl CrsBundle {
    /// Stable identifier for on-disk layout and logs.
    pub fn circuit_id(&self) -> String {
        let short = match self.backend_id.as_str() {
            GROTH16_BACKEND_ID => "groth16",
            ORACLE_BACKEND_ID => "oracle",
            other => other,
        };
        format!(
            "{short}-n{}-{}",
            self.circuit_meta.n,
            &self.circuit_meta.type_table_digest[..12]
        )
    }
}

/// Backend-opaque proof bytes in a self-describing envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofEnvelope {
    pub backend_id: String,
    pub hash_params_id: String,
    pub version: u32,
    #[serde(with = "base64_bytes")]
    pub payload: Vec<u8>,
}

/// A proof bound to its public statement and session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofBundle {
    pub proof: ProofEnvelope,
    pub statement: PublicStatement,
    pub s_id: String,
    pub created_at: u64,
}

mod base64_bytes {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        base64::engine::general_purpose::STANDARD.encode(bytes).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(de)?;
        base64::engine::general_purpose::STANDARD
            .decode(text.as_bytes())
            .map_err(serde::de::Error::custom)
    }
}

/// Replays the sparse constraint triples into an arkworks constraint system.
struct BridgeCircuit<'a> {
    cs: &'a ConstraintSystem,
    public: Option<Vec<Fr>>,
    witness: Option<Vec<Fr>>,
}

impl<'a> BridgeCircuit<'a> {
    fn convert(lc: &Lc, inputs: &[Variable], witnesses: &[Variable], np: usize) -> LinearCombination<Fr> {
        let mut out = LinearCombination::new();
        if !ark_ff::Zero::is_zero(&lc.constant) {
            out += (lc.constant, Variable::One);
        }
        for &(wire, coeff) in &lc.terms {
            let var = if wire < np { inputs[wire] } else { witnesses[wire - np] };
            out += (coeff, var);
        }
        out
    }
}

impl<'a> ConstraintSynthesizer<Fr> for BridgeCircuit<'a> {
    fn generate_constraints(self, ark: ConstraintSystemRef<Fr>) -> Result<(), SynthesisError> {
        let np = self.cs.num_public();
        let mut inputs = Vec::with_capacity(np);
        for i in 0..np {
            let value = self.public.as_ref().map(|p| p[i]);
            inputs.push(ark.new_input_variable(|| value.ok_or(SynthesisError::AssignmentMissing))?);
        }
        let mut witnesses = Vec::with_capacity(self.cs.num_witness());
        for i in 0..self.cs.num_witness() {
            let value = self.witness.as_ref().map(|w| w[i]);
            witnesses
                .push(ark.new_witness_variable(|| value.ok_or(SynthesisError::AssignmentMissing))?);
        }
        for constraint in self.cs.constraints() {
            ark.enforce_constraint(
                Self::convert(&constraint.a, &inputs, &witnesses, np),
                Self::convert(&constraint.b, &inputs, &witnesses, np),
                Self::convert(&constraint.c, &inputs, &witnesses, np),
            )?;
        }
        Ok(())
    }
}

/// Runs the trusted setup for one circuit. Keys are randomized per run; the
/// resulting bundle serves every session with the same `n` and table.
pub fn setup<R: RngCore + CryptoRng>(
    params: CircuitParams,
    table: &TypeTable,
    backend: BackendKind,
    rng: &mut R,
) -> Result<CrsBundle, ProofError> {
    let cs = build_circuit(params, table)?;
    let meta = cs.meta();
    match backend {
        BackendKind::Groth16 => {
            let bridge = BridgeCircuit { cs: &cs, public: None, witness: None };
            let (pk, vk) = Groth16::<Bn254>::circuit_specific_setup(bridge, rng)
                .map_err(|e| ProofError::Serialization(e.to_string()))?;
            Ok(CrsBundle {
                backend_id: GROTH16_BACKEND_ID.to_string(),
                hash_params_id: HASH_PARAMS_ID.to_string(),
                circuit_meta: meta,
                proving_key: canonical_bytes(&pk)?,
                verification_key: canonical_bytes(&vk)?,
            })
        }
        BackendKind::InsecureOracle => Ok(CrsBundle {
            backend_id: ORACLE_BACKEND_ID.to_string(),
            hash_params_id: HASH_PARAMS_ID.to_string(),
            circuit_meta: meta,
            proving_key: Vec::new(),
            verification_key: Vec::new(),
        }),
    }
}

fn canonical_bytes<T: CanonicalSerialize>(value: &T) -> Result<Vec<u8>, ProofError> {
    let mut bytes = Vec::new();
    value
        .serialize_compressed(&mut bytes)
        .map_err(|e| ProofError::Serialization(e.to_string()))?;
    Ok(bytes)
}

enum ProverBackend {
    Groth16(Box<ProvingKey<Bn254>>),
    Oracle,
}

/// Holds the rebuilt circuit and deserialized proving key for one bundle.
pub struct Prover {
    cs: ConstraintSystem,
    crs: CrsBundle,
    backend: ProverBackend,
}

impl Prover {
    /// Rebuilds the circuit from the bundle's metadata and the caller's
    /// table, which must hash to the digest recorded at setup.
    pub fn new(crs: CrsBundle, table: &TypeTable) -> Result<Self, ProofError> {
        let meta = &crs.circuit_meta;
        if table.digest() != meta.type_table_digest {
            return Err(ProofError::CrsMismatch(
                "type table digest differs from the one baked into the keys".into(),
            ));
        }
        if crs.hash_params_id != HASH_PARAMS_ID {
            return Err(ProofError::CrsMismatch(format!(
                "hash parameter set {:?} not supported",
                crs.hash_params_id
            )));
        }
        let params =
            CircuitParams::with_dims(meta.n, meta.max_json, meta.max_type, meta.num_types)
                .map_err(|e| ProofError::CrsMismatch(e.to_string()))?;
        let cs = build_circuit(params, table)?;
        if cs.constraint_count() != meta.constraint_count || cs.wire_count() != meta.wire_count {
            return Err(ProofError::CrsMismatch(
                "rebuilt circuit disagrees with the recorded metadata".into(),
            ));
        }
        let backend = match BackendKind::from_id(&crs.backend_id)? {
            BackendKind::Groth16 => {
                let pk = ProvingKey::<Bn254>::deserialize_compressed(crs.proving_key.as_slice())
                    .map_err(|e| ProofError::CrsMismatch(format!("proving key: {e}")))?;
                ProverBackend::Groth16(Box::new(pk))
            }
            BackendKind::InsecureOracle => ProverBackend::Oracle,
        };
        Ok(Self { cs, crs, backend })
    }

    pub fn circuit(&self) -> &ConstraintSystem {
        &self.cs
    }

    pub fn crs(&self) -> &CrsBundle {
        &self.crs
    }

    pub fn backend_id(&self) -> &str {
        &self.crs.backend_id
    }

    /// Generates a proof for `(x, w)`, refusing unsatisfied statements.
    pub fn prove<R: RngCore + CryptoRng>(
        &self,
        statement: &PublicStatement,
        witness: &Witness,
        s_id: &str,
        rng: &mut R,
    ) -> Result<ProofBundle, ProofError> {
        if !check_relation(&self.cs, statement, witness)? {
            return Err(ProofError::RelationUnsatisfied);
        }
        let payload = match &self.backend {
            ProverBackend::Groth16(pk) => {
                let bridge = BridgeCircuit {
                    cs: &self.cs,
                    public: Some(statement.to_field_elements()),
                    witness: Some(witness.values().to_vec()),
                };
                let proof = Groth16::<Bn254>::prove(pk, bridge, rng)
                    .map_err(|e| ProofError::Serialization(e.to_string()))?;
                canonical_bytes(&proof)?
            }
            ProverBackend::Oracle => oracle_transcript(statement),
        };
        Ok(ProofBundle {
            proof: ProofEnvelope {
                backend_id: self.crs.backend_id.clone(),
                hash_params_id: self.crs.hash_params_id.clone(),
                version: PROOF_ENVELOPE_VERSION,
                payload,
            },
            statement: statement.clone(),
            s_id: s_id.to_string(),
            created_at: now_ms(),
        })
    }

    /// Synthesizes the witness for a full session and proves it.
    pub fn prove_messages<R: RngCore + CryptoRng>(
        &self,
        messages: &[AuditMessage],
        s_id: &str,
        rng: &mut R,
    ) -> Result<ProofBundle, ProofError> {
        let (witness, statement) = synthesize_witness(&self.cs, messages)?;
        self.prove(&statement, &witness, s_id, rng)
    }
}

fn oracle_transcript(statement: &PublicStatement) -> Vec<u8> {
    let mut payload = ORACLE_TRANSCRIPT_TAG.as_bytes().to_vec();
    payload
        .extend_from_slice(serde_json::to_string(statement).expect("statement serializes").as_bytes());
    payload
}

enum VerifierBackend {
    Groth16(Box<PreparedVerifyingKey<Bn254>>),
    Oracle,
}

/// Verifies proof bundles against one key bundle. Construction needs only
/// the verification key and circuit metadata.
pub struct Verifier {
    meta: CircuitMeta,
    backend_id: String,
    hash_params_id: String,
    backend: VerifierBackend,
}

impl Verifier {
    pub fn new(crs: &CrsBundle) -> Result<Self, ProofError> {
        let backend = match BackendKind::from_id(&crs.backend_id)? {
            BackendKind::Groth16 => {
                let vk =
                    VerifyingKey::<Bn254>::deserialize_compressed(crs.verification_key.as_slice())
                        .map_err(|e| ProofError::CrsMismatch(format!("verification key: {e}")))?;
                let pvk = Groth16::<Bn254>::process_vk(&vk)
                    .map_err(|e| ProofError::CrsMismatch(e.to_string()))?;
                VerifierBackend::Groth16(Box::new(pvk))
            }
            BackendKind::InsecureOracle => VerifierBackend::Oracle,
        };
        Ok(Self {
            meta: crs.circuit_meta.clone(),
            backend_id: crs.backend_id.clone(),
            hash_params_id: crs.hash_params_id.clone(),
            backend,
        })
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn meta(&self) -> &CircuitMeta {
        &self.meta
    }

    /// Checks a bundle: 1 for valid proofs, 0 for invalid ones. Undecodable
    /// bytes surface as [`ProofError::MalformedProof`], distinct from a
    /// clean 0.
    pub fn verify(&self, bundle: &ProofBundle) -> Result<bool, ProofError> {
        let expected = (self.meta.public_layout.counts, self.meta.public_layout.hashes);
        if bundle.statement.shape() != expected {
            return Err(ProofError::ShapeMismatch(format!(
                "statement shape {:?}, verifier expects {:?}",
                bundle.statement.shape(),
                expected
            )));
        }
        if bundle.proof.backend_id != self.backend_id {
            return Err(ProofError::MalformedProof(format!(
                "proof was produced by backend {:?}, verifier holds {:?}",
                bundle.proof.backend_id, self.backend_id
            )));
        }
        if bundle.proof.hash_params_id != self.hash_params_id {
            return Err(ProofError::MalformedProof(
                "proof and keys disagree on the hash parameter set".into(),
            ));
        }
        if bundle.proof.version != PROOF_ENVELOPE_VERSION {
            return Err(ProofError::MalformedProof(format!(
                "unsupported proof envelope version {}",
                bundle.proof.version
            )));
        }
        match &self.backend {
            VerifierBackend::Groth16(pvk) => {
                let proof = Proof::<Bn254>::deserialize_compressed(bundle.proof.payload.as_slice())
                    .map_err(|e| ProofError::MalformedProof(e.to_string()))?;
                let inputs = bundle.statement.to_field_elements();
                Groth16::<Bn254>::verify_with_processed_vk(pvk, &inputs, &proof)
                    .map_err(|e| ProofError::ShapeMismatch(e.to_string()))
            }
            VerifierBackend::Oracle => {
                let expected = oracle_transcript(&bundle.statement);
                Ok(bundle.proof.payload == expected)
            }
        }
    }
}

/// Key files on disk: `<base>/<circuit-id>/{pk.bin, vk.bin, meta.json}`.
pub fn save_crs(bundle: &CrsBundle, base: &Path) -> Result<PathBuf, ProofError> {
    let dir = base.join(bundle.circuit_id());
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("pk.bin"), &bundle.proving_key)?;
    std::fs::write(dir.join("vk.bin"), &bundle.verification_key)?;
    let meta = serde_json::json!({
        "backend_id": bundle.backend_id,
        "hash_params_id": bundle.hash_params_id,
        "version": PROOF_ENVELOPE_VERSION,
        "circuit_meta": bundle.circuit_meta,
    });
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(dir)
}

/// Loads a bundle from its directory, or from a parent directory containing
/// exactly one bundle.
pub fn load_crs(path: &Path) -> Result<CrsBundle, ProofError> {
    let dir = resolve_crs_dir(path)?;
    let meta_text = std::fs::read_to_string(dir.join("meta.json"))?;
    let meta: serde_json::Value =
        serde_json::from_str(&meta_text).map_err(|e| ProofError::Serialization(e.to_string()))?;
    let circuit_meta: CircuitMeta = serde_json::from_value(
        meta.get("circuit_meta")
            .cloned()
            .ok_or_else(|| ProofError::Serialization("meta.json missing circuit_meta".into()))?,
    )
    .map_err(|e| ProofError::Serialization(e.to_string()))?;
    let backend_id = meta
        .get("backend_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ProofError::Serialization("meta.json missing backend_id".into()))?
        .to_string();
    let hash_params_id = meta
        .get("hash_params_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ProofError::Serialization("meta.json missing hash_params_id".into()))?
        .to_string();
    Ok(CrsBundle {
        backend_id,
        hash_params_id,
        circuit_meta,
        proving_key: std::fs::read(dir.join("pk.bin"))?,
        verification_key: std::fs::read(dir.join("vk.bin"))?,
    })
}

fn resolve_crs_dir(path: &Path) -> Result<PathBuf, ProofError> {
    if path.join("meta.json").is_file() {
        return Ok(path.to_path_buf());
    }
    let mut candidates = Vec::new();
    for entry in std::fs::read_dir(path)? {
        let entry = entry?;
        if entry.path().join("meta.json").is_file() {
            candidates.push(entry.path());
        }
    }
    match candidates.len() {
        1 => Ok(candidates.remove(0)),
        0 => Err(ProofError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no key bundle under {}", path.display()),
        ))),
        _ => Err(ProofError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("multiple key bundles under {}; point at one", path.display()),
        ))),
    }
}

pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
