//! The audit circuit: per-message format validation, type extraction,
//! known-type matching, count accumulation, digest computation, and the
//! zero-padding constraint.
//!
//! For each message `i` the constraint system enforces:
//!
//! (a) every byte wire is in `[0, 255]` via bit decomposition;
//! (b) the fixed 10-byte envelope prefix, and the suffix `"` `}` at positions
//!     `type_len+10`, `type_len+11`;
//! (c) extracted type bytes equal `json[i][10..10+type_len]`, zero-padded to
//!     `max_type`;
//! (d) per-type selectors `match[i][j]` with `Σ_j match[i][j] = 1`;
//! (e) running sums `sum[j][i+1] = sum[j][i] + match[i][j]`, with the public
//!     counts bound to the final sums;
//! (f) `hashes[i] = poseidon(limb0, limb1, limb2, total_len)` over the packed
//!     message bytes;
//! (g) `json[i][m] · ge[i][m] = 0` for every position `m ≥ total_len`.
//!
//! Variable positions (suffix bytes, extraction range, padding comparators)
//! all derive from one one-hot selector over the possible `type_len` values,
//! which keeps the per-message constraint count at `O(L + max_type·K)`.
//!
//! Public inputs are laid out as `counts[0..K)` then `hashes[0..n)`. Table
//! entries are compiled in as constants, so a new table means a new circuit
//! (and a new setup).

use crate::field::{fr_to_decimal, Fr};
use crate::hashing::{self, PoseidonSpec, LIMB_WIDTHS};
use crate::message::{self, AuditMessage, MessageError, ENVELOPE_PREFIX};
use crate::params::{CircuitParams, TypeTable, ENVELOPE_OVERHEAD};
use crate::r1cs::{boolean, eq_constant, eq_wire, Constraint, Lc};
use ark_ff::{Field, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} messages, got {got}")]
    WrongMessageCount { expected: usize, got: usize },
    #[error("message {index}: {source}")]
    MalformedMessage { index: usize, source: MessageError },
    #[error("message {index} has unknown type {type_string:?}")]
    UnknownType { index: usize, type_string: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// The public values of one audited session: per-type counts and per-message
/// digests — nothing else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicStatement {
    pub counts: Vec<u64>,
    #[serde(with = "crate::field::decimal_vec")]
    pub hashes: Vec<Fr>,
}

impl PublicStatement {
    /// Field-element view in public-input order: counts, then hashes.
    pub fn to_field_elements(&self) -> Vec<Fr> {
        self.counts
            .iter()
            .map(|&c| Fr::from(c))
            .chain(self.hashes.iter().copied())
            .collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.counts.len(), self.hashes.len())
    }

    /// Σ counts, which must equal the session size `n`.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Declared order and widths of the public inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicLayout {
    /// Number of leading count inputs.
    pub counts: usize,
    /// Number of trailing hash inputs.
    pub hashes: usize,
}

/// Machine-readable description of a built circuit, embedded in key bundles
/// and consumed by the bench harness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMeta {
    pub n: usize,
    pub max_json: usize,
    pub max_type: usize,
    pub num_types: usize,
    pub type_table_digest: String,
    pub constraint_count: usize,
    pub wire_count: usize,
    pub public_layout: PublicLayout,
}

/// Witness wire indices for one message, in allocation order.
#[derive(Debug, Clone)]
struct MessageWires {
    json: Vec<usize>,
    bits: Vec<usize>,
    sel: Vec<usize>,
    ext: Vec<usize>,
    quote_products: Vec<usize>,
    brace_products: Vec<usize>,
    ext_packed: usize,
    match_inv: Vec<usize>,
    match_bits: Vec<usize>,
    sums: Vec<usize>,
    limbs: [usize; 3],
    poseidon: Vec<usize>,
}

/// The built constraint system for one circuit size and type table.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub params: CircuitParams,
    pub table: TypeTable,
    constraints: Vec<Constraint>,
    num_public: usize,
    num_witness: usize,
    wires: Vec<MessageWires>,
}

/// The private assignment: message bytes, type lengths, and every internal
/// wire (selectors, match bits, running sums, hash intermediates).
#[derive(Debug, Clone)]
pub struct Witness {
    offset: usize,
    values: Vec<Fr>,
}

impl Witness {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Fr] {
        &self.values
    }

    /// Value of a global witness wire index.
    pub fn value(&self, wire: usize) -> Fr {
        self.values[wire - self.offset]
    }

    /// Overwrites a wire value; adversarial tests use this to probe
    /// constraint soundness.
    pub fn set_value(&mut self, wire: usize, value: Fr) {
        self.values[wire - self.offset] = value;
    }
}

impl ConstraintSystem {
    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    /// Total wires including the constant-one wire.
    pub fn wire_count(&self) -> usize {
        1 + self.num_public + self.num_witness
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    pub fn num_witness(&self) -> usize {
        self.num_witness
    }

    pub(crate) fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Wire indices of the match selectors for message `i`.
    pub fn match_wires(&self, i: usize) -> &[usize] {
        &self.wires[i].match_bits
    }

    /// Wire indices of the running sums after message `i`.
    pub fn sum_wires(&self, i: usize) -> &[usize] {
        &self.wires[i].sums
    }

    /// Wire indices of the padded message bytes of message `i`.
    pub fn json_wires(&self, i: usize) -> &[usize] {
        &self.wires[i].json
    }

    /// Wire indices of the bit decomposition of message `i` (8 per byte,
    /// little-endian).
    pub fn bit_wires(&self, i: usize) -> &[usize] {
        &self.wires[i].bits
    }

    pub fn public_layout(&self) -> PublicLayout {
        PublicLayout { counts: self.params.num_types, hashes: self.params.n }
    }

    pub fn meta(&self) -> CircuitMeta {
        CircuitMeta {
            n: self.params.n,
            max_json: self.params.max_json,
            max_type: self.params.max_type,
            num_types: self.params.num_types,
            type_table_digest: self.table.digest(),
            constraint_count: self.constraint_count(),
            wire_count: self.wire_count(),
            public_layout: self.public_layout(),
        }
    }

    /// Declared private inputs (message bytes plus one length per message),
    /// as distinct from total witness wires.
    pub fn declared_private_inputs(&self) -> usize {
        self.params.n * (self.params.max_json + 1)
    }
}

/// Builds the constraint system for `params` and `table`.
pub fn build_circuit(
    params: CircuitParams,
    table: &TypeTable,
) -> Result<ConstraintSystem, CircuitError> {
    if table.len() != params.num_types {
        return Err(CircuitError::InvalidParams(format!(
            "table has {} entries, circuit expects {}",
            table.len(),
            params.num_types
        )));
    }
    if params.max_json != LIMB_WIDTHS.iter().sum::<usize>() {
        return Err(CircuitError::InvalidParams(format!(
            "packing layout is fixed at {} bytes, got max_json = {}",
            LIMB_WIDTHS.iter().sum::<usize>(),
            params.max_json
        )));
    }
    if params.n == 0 || ENVELOPE_OVERHEAD + params.max_type > params.max_json {
        return Err(CircuitError::InvalidParams("params violate their invariants".into()));
    }
    for entry in table.entries() {
        if entry.len() > params.max_type {
            return Err(CircuitError::InvalidParams(format!(
                "table entry {entry:?} exceeds max_type {}",
                params.max_type
            )));
        }
    }

    let n = params.n;
    let k = params.num_types;
    let max_type = params.max_type;
    let num_public = k + n;
    let spec = PoseidonSpec::for_arity(4).expect("arity 4 supported");

    let mut constraints = Vec::new();
    let mut wires = Vec::with_capacity(n);
    let mut next_wire = num_public;
    let mut alloc = |count: usize| -> Vec<usize> {
        let start = next_wire;
        next_wire += count;
        (start..next_wire).collect()
    };

    let table_packed: Vec<Fr> = table.entries().iter().map(|e| pack_type_constant(e, max_type)).collect();
    let mut prev_sums: Vec<Lc> = vec![Lc::zero(); k];

    for i in 0..n {
        let json = alloc(params.max_json);
        let bits = alloc(params.max_json * 8);
        let sel = alloc(max_type);
        let ext = alloc(max_type);
        let quote_products = alloc(max_type);
        let brace_products = alloc(max_type);
        let ext_packed = alloc(1)[0];
        let match_inv = alloc(k);
        let match_bits = alloc(k);
        let sums = alloc(k);
        let limbs_vec = alloc(3);
        let limbs = [limbs_vec[0], limbs_vec[1], limbs_vec[2]];
        let poseidon = alloc(spec.constraint_count());

        // (a) byte range checks: booleanity plus recomposition.
        for (byte_pos, &jw) in json.iter().enumerate() {
            let mut recomposed = Lc::zero();
            for t in 0..8 {
                let bw = bits[byte_pos * 8 + t];
                constraints.push(boolean(bw));
                recomposed.add_term(bw, Fr::from(1u64 << t));
            }
            constraints.push(eq_wire(recomposed, jw));
        }

        // (b) fixed prefix bytes.
        for (pos, &expected) in ENVELOPE_PREFIX.iter().enumerate() {
            constraints.push(eq_constant(Lc::wire(json[pos]), Fr::from(expected as u64)));
        }

        // One-hot selector over type_len ∈ [1, max_type]; sel[v-1] = 1 iff
        // type_len = v.
        let mut sel_sum = Lc::zero();
        for &sw in &sel {
            constraints.push(boolean(sw));
            sel_sum.add_term(sw, Fr::one());
        }
        constraints.push(eq_constant(sel_sum, Fr::one()));

        // (c) extracted bytes: ext[m] = json[10+m] · [m < type_len], where the
        // range indicator is a suffix sum of the selector.
        for m in 0..max_type {
            let mut in_range = Lc::zero();
            for v in (m + 1)..=max_type {
                in_range.add_term(sel[v - 1], Fr::one());
            }
            constraints.push(Constraint {
                a: Lc::wire(json[ENVELOPE_PREFIX.len() + m]),
                b: in_range,
                c: Lc::wire(ext[m]),
            });
        }

        // (b) variable-position suffix: the selector picks out the byte at
        // type_len+10 (must be `"`) and type_len+11 (must be `}`).
        let mut quote_sum = Lc::zero();
        let mut brace_sum = Lc::zero();
        for v in 1..=max_type {
            constraints.push(Constraint {
                a: Lc::wire(sel[v - 1]),
                b: Lc::wire(json[ENVELOPE_PREFIX.len() + v]),
                c: Lc::wire(quote_products[v - 1]),
            });
            constraints.push(Constraint {
                a: Lc::wire(sel[v - 1]),
                b: Lc::wire(json[ENVELOPE_PREFIX.len() + 1 + v]),
                c: Lc::wire(brace_products[v - 1]),
            });
            quote_sum.add_term(quote_products[v - 1], Fr::one());
            brace_sum.add_term(brace_products[v - 1], Fr::one());
        }
        constraints.push(eq_constant(quote_sum, Fr::from(b'"' as u64)));
        constraints.push(eq_constant(brace_sum, Fr::from(b'}' as u64)));

        // (g) padding: ge[m] = [m ≥ total_len] as a prefix sum of the
        // selector; every byte at or past total_len must be zero.
        for (m, &jw) in json.iter().enumerate().skip(ENVELOPE_OVERHEAD + 1) {
            let mut ge = Lc::zero();
            for v in 1..=max_type.min(m - ENVELOPE_OVERHEAD) {
                ge.add_term(sel[v - 1], Fr::one());
            }
            constraints.push(Constraint { a: Lc::wire(jw), b: ge, c: Lc::zero() });
        }

        // (d) type matching against compiled-in constants, via one packed
        // comparison per table entry. ext bytes are range-checked products,
        // so base-256 packing is injective and byte-wise equality reduces to
        // equality of the packed values.
        let mut packed_lc = Lc::zero();
        for (m, &ew) in ext.iter().enumerate() {
            packed_lc.add_term(ew, byte_weight(max_type, m));
        }
        constraints.push(eq_wire(packed_lc, ext_packed));

        let mut match_sum = Lc::zero();
        for j in 0..k {
            let mut diff = Lc::wire(ext_packed);
            diff.add_constant(-table_packed[j]);
            // diff·inv = 1 − match and diff·match = 0 force match ∈ {0,1}
            // with match = 1 exactly when diff = 0.
            let mut one_minus_match = Lc::constant(Fr::one());
            one_minus_match.add_term(match_bits[j], -Fr::one());
            constraints.push(Constraint {
                a: diff.clone(),
                b: Lc::wire(match_inv[j]),
                c: one_minus_match,
            });
            constraints.push(Constraint {
                a: diff,
                b: Lc::wire(match_bits[j]),
                c: Lc::zero(),
            });
            match_sum.add_term(match_bits[j], Fr::one());
        }
        constraints.push(eq_constant(match_sum, Fr::one()));

        // (e) running sums.
        for j in 0..k {
            let mut next = prev_sums[j].clone();
            next.add_term(match_bits[j], Fr::one());
            constraints.push(eq_wire(next, sums[j]));
            prev_sums[j] = Lc::wire(sums[j]);
        }

        // (f) packing limbs and the digest.
        let mut offset = 0;
        for (limb_idx, &width) in LIMB_WIDTHS.iter().enumerate() {
            let mut limb_lc = Lc::zero();
            for pos in 0..width {
                limb_lc.add_term(json[offset + pos], byte_weight(width, pos));
            }
            constraints.push(eq_wire(limb_lc, limbs[limb_idx]));
            offset += width;
        }

        let mut total_len = Lc::constant(Fr::from(ENVELOPE_OVERHEAD as u64));
        for v in 1..=max_type {
            total_len.add_term(sel[v - 1], Fr::from(v as u64));
        }

        let inputs = [Lc::wire(limbs[0]), Lc::wire(limbs[1]), Lc::wire(limbs[2]), total_len];
        let digest_lc = poseidon_gadget(spec, &inputs, &poseidon, &mut constraints);
        constraints.push(eq_wire(digest_lc, k + i));

        wires.push(MessageWires {
            json,
            bits,
            sel,
            ext,
            quote_products,
            brace_products,
            ext_packed,
            match_inv,
            match_bits,
            sums,
            limbs,
            poseidon,
        });
    }

    // Bind the public counts to the final running sums.
    for (j, sum_lc) in prev_sums.into_iter().enumerate() {
        constraints.push(eq_wire(sum_lc, j));
    }

    Ok(ConstraintSystem {
        params,
        table: table.clone(),
        constraints,
        num_public,
        num_witness: next_wire - num_public,
        wires,
    })
}

/// Coefficient of the byte at `pos` in a big-endian base-256 packing of
/// `width` bytes.
fn byte_weight(width: usize, pos: usize) -> Fr {
    let mut w = Fr::one();
    for _ in 0..(width - 1 - pos) {
        w *= Fr::from(256u64);
    }
    w
}

/// A table entry zero-padded to `max_type` bytes and packed big-endian.
fn pack_type_constant(entry: &str, max_type: usize) -> Fr {
    let mut acc = Fr::zero();
    let bytes = entry.as_bytes();
    for m in 0..max_type {
        let b = bytes.get(m).copied().unwrap_or(0);
        acc = acc * Fr::from(256u64) + Fr::from(b as u64);
    }
    acc
}

/// Emits the Poseidon permutation over linear combinations, consuming
/// `trace_wires` for the S-box intermediates in the same order the native
/// [`PoseidonSpec::permute_with_trace`] reports them. Round constants and the
/// MDS mix stay linear, so only S-boxes cost constraints.
fn poseidon_gadget(
    spec: &PoseidonSpec,
    inputs: &[Lc; 4],
    trace_wires: &[usize],
    constraints: &mut Vec<Constraint>,
) -> Lc {
    let mut state: Vec<Lc> = Vec::with_capacity(spec.width);
    state.push(Lc::zero());
    state.extend(inputs.iter().cloned());

    let mut next_trace = 0;
    for round in 0..spec.rounds() {
        for (i, s) in state.iter_mut().enumerate() {
            s.add_constant(spec.ark[round * spec.width + i]);
        }
        let sbox_elems = if spec.is_full_round(round) { spec.width } else { 1 };
        for s in state.iter_mut().take(sbox_elems) {
            let x2 = trace_wires[next_trace];
            let x4 = trace_wires[next_trace + 1];
            let x5 = trace_wires[next_trace + 2];
            next_trace += 3;
            constraints.push(Constraint { a: s.clone(), b: s.clone(), c: Lc::wire(x2) });
            constraints.push(Constraint { a: Lc::wire(x2), b: Lc::wire(x2), c: Lc::wire(x4) });
            constraints.push(Constraint { a: Lc::wire(x4), b: s.clone(), c: Lc::wire(x5) });
            *s = Lc::wire(x5);
        }
        let old = state.clone();
        for (i, s) in state.iter_mut().enumerate() {
            let mut mixed = Lc::zero();
            for (j, o) in old.iter().enumerate() {
                mixed.add_scaled(o, spec.mds[i][j]);
            }
            *s = mixed;
        }
    }
    debug_assert_eq!(next_trace, trace_wires.len());
    state.swap_remove(0)
}

/// Computes the full witness and public statement for `n` canonical
/// messages. The statement's counts equal the plaintext oracle and its hashes
/// equal the native digests.
pub fn synthesize_witness(
    cs: &ConstraintSystem,
    messages: &[AuditMessage],
) -> Result<(Witness, PublicStatement), CircuitError> {
    synthesize_inner(cs, messages, true)
}

/// Witness synthesis without canonical-form or table-membership validation.
///
/// Intended for adversarial tests: the resulting witness honestly reflects
/// the (possibly malformed) inputs, so [`check_relation`] pinpoints which
/// constraint family rejects them.
pub fn synthesize_witness_unvalidated(
    cs: &ConstraintSystem,
    messages: &[AuditMessage],
) -> Result<(Witness, PublicStatement), CircuitError> {
    synthesize_inner(cs, messages, false)
}

fn synthesize_inner(
    cs: &ConstraintSystem,
    messages: &[AuditMessage],
    validate: bool,
) -> Result<(Witness, PublicStatement), CircuitError> {
    let params = cs.params;
    if messages.len() != params.n {
        return Err(CircuitError::WrongMessageCount { expected: params.n, got: messages.len() });
    }
    let spec = PoseidonSpec::for_arity(4).expect("arity 4 supported");
    let table_packed: Vec<Fr> =
        cs.table.entries().iter().map(|e| pack_type_constant(e, params.max_type)).collect();

    let mut values = vec![Fr::zero(); cs.num_witness];
    let offset = cs.num_public;
    let mut running = vec![0u64; params.num_types];
    let mut hashes = Vec::with_capacity(params.n);

    for (i, msg) in messages.iter().enumerate() {
        if validate {
            msg.validate(params.max_json, params.max_type)
                .map_err(|source| CircuitError::MalformedMessage { index: i, source })?;
            if !cs.table.contains(&msg.type_string) {
                return Err(CircuitError::UnknownType {
                    index: i,
                    type_string: String::from_utf8_lossy(&msg.type_string).into_owned(),
                });
            }
        }
        if msg.raw.len() > params.max_json {
            return Err(CircuitError::MalformedMessage {
                index: i,
                source: MessageError::TooLong { len: msg.raw.len(), max: params.max_json },
            });
        }
        let padded = message::pad_message(&msg.raw, params.max_json)
            .expect("length checked above");
        let w = &cs.wires[i];

        for (pos, &b) in padded.iter().enumerate() {
            values[w.json[pos] - offset] = Fr::from(b as u64);
            for t in 0..8 {
                values[w.bits[pos * 8 + t] - offset] = Fr::from(((b >> t) & 1) as u64);
            }
        }

        let type_len = msg.type_len;
        for v in 1..=params.max_type {
            values[w.sel[v - 1] - offset] =
                if v == type_len { Fr::one() } else { Fr::zero() };
        }

        let mut ext_bytes = vec![0u8; params.max_type];
        for m in 0..params.max_type {
            if m < type_len {
                ext_bytes[m] = padded[ENVELOPE_PREFIX.len() + m];
            }
            values[w.ext[m] - offset] = Fr::from(ext_bytes[m] as u64);
        }

        for v in 1..=params.max_type {
            let s = v == type_len;
            let q = if s { padded[ENVELOPE_PREFIX.len() + v] } else { 0 };
            let b = if s { padded[ENVELOPE_PREFIX.len() + 1 + v] } else { 0 };
            values[w.quote_products[v - 1] - offset] = Fr::from(q as u64);
            values[w.brace_products[v - 1] - offset] = Fr::from(b as u64);
        }

        let mut ext_packed = Fr::zero();
        for &b in &ext_bytes {
            ext_packed = ext_packed * Fr::from(256u64) + Fr::from(b as u64);
        }
        values[w.ext_packed - offset] = ext_packed;

        for j in 0..params.num_types {
            let diff = ext_packed - table_packed[j];
            if diff.is_zero() {
                values[w.match_bits[j] - offset] = Fr::one();
                values[w.match_inv[j] - offset] = Fr::zero();
                running[j] += 1;
            } else {
                values[w.match_bits[j] - offset] = Fr::zero();
                values[w.match_inv[j] - offset] = diff.inverse().expect("nonzero");
            }
        }
        for j in 0..params.num_types {
            values[w.sums[j] - offset] = Fr::from(running[j]);
        }

        let limbs = hashing::pack_bytes(&padded).expect("padded to 64 bytes");
        for (idx, limb) in limbs.iter().enumerate() {
            values[w.limbs[idx] - offset] = *limb;
        }

        let total_len = Fr::from((type_len + ENVELOPE_OVERHEAD) as u64);
        let mut state = vec![Fr::zero(), limbs[0], limbs[1], limbs[2], total_len];
        let mut trace_pos = 0;
        spec.permute_with_trace(&mut state, &mut |v| {
            values[w.poseidon[trace_pos] - offset] = v;
            trace_pos += 1;
        });
        hashes.push(state[0]);
    }

    let statement = PublicStatement { counts: running, hashes };
    if validate {
        debug_assert_eq!(
            statement.counts,
            message::count_types(messages, &cs.table).expect("types validated"),
        );
    }
    Ok((Witness { offset, values }, statement))
}

/// Native evaluation of the circuit relation: true exactly when every
/// constraint holds under `(x, w)`. This is the soundness oracle and the
/// decision procedure of the insecure development backend.
pub fn check_relation(
    cs: &ConstraintSystem,
    statement: &PublicStatement,
    witness: &Witness,
) -> Result<bool, CircuitError> {
    let expected = (cs.params.num_types, cs.params.n);
    if statement.shape() != expected {
        return Err(CircuitError::ShapeMismatch(format!(
            "statement shape {:?}, circuit expects {:?}",
            statement.shape(),
            expected
        )));
    }
    if witness.values.len() != cs.num_witness || witness.offset != cs.num_public {
        return Err(CircuitError::ShapeMismatch(format!(
            "witness has {} wires at offset {}, circuit expects {} at {}",
            witness.values.len(),
            witness.offset,
            cs.num_witness,
            cs.num_public
        )));
    }
    let public = statement.to_field_elements();
    Ok(cs
        .constraints
        .iter()
        .all(|constraint| constraint.holds(&public, &witness.values)))
}

/// Renders the circuit metadata dump consumed by the bench harness.
pub fn meta_json(cs: &ConstraintSystem) -> String {
    serde_json::to_string_pretty(&cs.meta()).expect("meta serializes")
}

/// Debug helper: indices of constraints violated by `(x, w)`.
pub fn violated_constraints(
    cs: &ConstraintSystem,
    statement: &PublicStatement,
    witness: &Witness,
) -> Vec<usize> {
    let public = statement.to_field_elements();
    cs.constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.holds(&public, &witness.values))
        .map(|(i, _)| i)
        .collect()
}

impl std::fmt::Display for PublicStatement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "counts={:?} hashes=[", self.counts)?;
        for (i, h) in self.hashes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", fr_to_decimal(h))?;
        }
        write!(f, "]")
    }
}
