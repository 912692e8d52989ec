//! Byte-to-field packing and the Poseidon digest.
//!
//! A padded 64-byte message packs into three big-endian limbs (31 + 31 + 2
//! bytes), each well below the field modulus, so packing is injective. The
//! per-message digest is `poseidon(limb0, limb1, limb2, total_len)` — the
//! trailing length input separates messages whose padded bytes coincide.
//!
//! The permutation uses the circom-compatible BN254 x5 parameter set
//! ([`HASH_PARAMS_ID`]); the same code doubles as the witness generator for
//! the in-circuit hash, which replays the identical sequence of S-box steps.

use crate::field::Fr;
use crate::message::AuditMessage;
use crate::params::DEFAULT_MAX_JSON;
use ark_ff::{Field, Zero};
use std::sync::OnceLock;
use thiserror::Error;

/// Identifier of the Poseidon instantiation baked into every key bundle.
pub const HASH_PARAMS_ID: &str = "poseidon-bn254-x5-circom";

/// Highest supported hash arity.
pub const MAX_ARITY: usize = 4;

/// Byte widths of the three packing limbs.
pub const LIMB_WIDTHS: [usize; 3] = [31, 31, 2];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HashError {
    #[error("packing expects exactly {expected} bytes, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("unsupported hash arity {0} (1..={MAX_ARITY})")]
    UnsupportedArity(usize),
}

/// A 64-byte message packed into field elements, plus its claimed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedMessage {
    /// Big-endian limbs over bytes `[0..31)`, `[31..62)`, `[62..64)`.
    pub limbs: [Fr; 3],
    /// The unpadded envelope length.
    pub total_len: Fr,
}

/// Packs exactly 64 padded bytes into three big-endian limbs.
pub fn pack_bytes(padded: &[u8]) -> Result<[Fr; 3], HashError> {
    if padded.len() != DEFAULT_MAX_JSON {
        return Err(HashError::WrongLength { expected: DEFAULT_MAX_JSON, got: padded.len() });
    }
    let mut limbs = [Fr::zero(); 3];
    let mut offset = 0;
    for (limb, &width) in limbs.iter_mut().zip(LIMB_WIDTHS.iter()) {
        let mut acc = Fr::zero();
        for &byte in &padded[offset..offset + width] {
            acc = acc * Fr::from(256u64) + Fr::from(byte as u64);
        }
        *limb = acc;
        offset += width;
    }
    Ok(limbs)
}

/// One Poseidon instantiation: width `t = arity + 1`, x^5 S-box, 8 full
/// rounds, and the width-dependent partial round count.
pub struct PoseidonSpec {
    pub width: usize,
    pub full_rounds: usize,
    pub partial_rounds: usize,
    /// Flat round constants, indexed `round * width + position`.
    pub ark: Vec<Fr>,
    pub mds: Vec<Vec<Fr>>,
}

impl PoseidonSpec {
    /// The parameter set for a given arity, loaded from the shared
    /// circom-compatible BN254 tables.
    pub fn for_arity(arity: usize) -> Result<&'static Self, HashError> {
        static SPECS: OnceLock<Vec<PoseidonSpec>> = OnceLock::new();
        if arity == 0 || arity > MAX_ARITY {
            return Err(HashError::UnsupportedArity(arity));
        }
        let specs = SPECS.get_or_init(|| {
            (1..=MAX_ARITY)
                .map(|a| {
                    let width = (a + 1) as u8;
                    let params =
                        light_poseidon::parameters::bn254_x5::get_poseidon_parameters::<Fr>(width)
                            .expect("parameter table covers widths 2..=5");
                    PoseidonSpec {
                        width: params.width,
                        full_rounds: params.full_rounds,
                        partial_rounds: params.partial_rounds,
                        ark: params.ark,
                        mds: params.mds,
                    }
                })
                .collect()
        });
        Ok(&specs[arity - 1])
    }

    pub fn rounds(&self) -> usize {
        self.full_rounds + self.partial_rounds
    }

    /// Whether the S-box applies to every state element in `round`, or only
    /// to element 0.
    pub fn is_full_round(&self, round: usize) -> bool {
        let half = self.full_rounds / 2;
        round < half || round >= half + self.partial_rounds
    }

    /// Runs the permutation in place.
    pub fn permute(&self, state: &mut [Fr]) {
        self.permute_with_trace(state, &mut |_| {});
    }

    /// Runs the permutation, reporting every S-box intermediate (`x²`, `x⁴`,
    /// `x⁵` per S-boxed element, in round order) to `on_wire`. The circuit
    /// gadget allocates its witness wires in exactly this order.
    pub fn permute_with_trace(&self, state: &mut [Fr], on_wire: &mut dyn FnMut(Fr)) {
        debug_assert_eq!(state.len(), self.width);
        for round in 0..self.rounds() {
            for (i, s) in state.iter_mut().enumerate() {
                *s += self.ark[round * self.width + i];
            }
            let sbox_elems = if self.is_full_round(round) { self.width } else { 1 };
            for s in state.iter_mut().take(sbox_elems) {
                let x2 = s.square();
                on_wire(x2);
                let x4 = x2.square();
                on_wire(x4);
                let x5 = x4 * *s;
                on_wire(x5);
                *s = x5;
            }
            let old = state.to_vec();
            for (i, s) in state.iter_mut().enumerate() {
                *s = old
                    .iter()
                    .zip(self.mds[i].iter())
                    .fold(Fr::zero(), |acc, (x, m)| acc + *x * m);
            }
        }
    }

    /// Fixed-arity hash: state `[0, inputs...]`, one permutation, output
    /// element 0.
    pub fn hash(&self, inputs: &[Fr]) -> Fr {
        debug_assert_eq!(inputs.len(), self.width - 1);
        let mut state = Vec::with_capacity(self.width);
        state.push(Fr::zero());
        state.extend_from_slice(inputs);
        self.permute(&mut state);
        state[0]
    }

    /// Constraints one in-circuit hash contributes: three per S-box.
    pub fn constraint_count(&self) -> usize {
        3 * (self.full_rounds * self.width + self.partial_rounds)
    }
}

/// Hashes 1..=4 field elements.
pub fn poseidon(inputs: &[Fr]) -> Result<Fr, HashError> {
    let spec = PoseidonSpec::for_arity(inputs.len())?;
    Ok(spec.hash(inputs))
}

/// The per-message digest: pack the zero-padded envelope bytes and hash them
/// together with the true length.
pub fn message_digest(msg: &AuditMessage) -> Result<Fr, HashError> {
    let packed = pack_message(msg)?;
    let spec = PoseidonSpec::for_arity(4).expect("arity 4 supported");
    Ok(spec.hash(&[packed.limbs[0], packed.limbs[1], packed.limbs[2], packed.total_len]))
}

/// One entry of the digest test-vector fixture.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DigestFixture {
    pub r#type: String,
    pub digest: String,
}

/// Renders the digest test vectors for every table entry, as shipped in the
/// fixture file and regenerated by the `fixtures` CLI subcommand.
pub fn digest_fixtures(table: &crate::params::TypeTable) -> Vec<DigestFixture> {
    table
        .entries()
        .iter()
        .map(|t| {
            let msg = AuditMessage::from_type(t.as_bytes(), table.max_type(), 0)
                .expect("table entries are legal types");
            let digest = message_digest(&msg).expect("canonical messages hash");
            DigestFixture { r#type: t.clone(), digest: crate::field::fr_to_decimal(&digest) }
        })
        .collect()
}

/// Packs a message's padded bytes and length.
pub fn pack_message(msg: &AuditMessage) -> Result<PackedMessage, HashError> {
    let mut padded = msg.raw.clone();
    if padded.len() > DEFAULT_MAX_JSON {
        return Err(HashError::WrongLength { expected: DEFAULT_MAX_JSON, got: padded.len() });
    }
    padded.resize(DEFAULT_MAX_JSON, 0);
    Ok(PackedMessage {
        limbs: pack_bytes(&padded)?,
        total_len: Fr::from(msg.total_len as u64),
    })
}
