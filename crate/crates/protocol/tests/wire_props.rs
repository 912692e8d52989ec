//! Property tests over the wire codec: encode∘decode is the identity for
//! every envelope kind with randomized bodies.

use proptest::prelude::*;
use zkmcp_core::circuit::PublicStatement;
use zkmcp_core::field::fr_from_decimal;
use zkmcp_core::proof::ProofEnvelope;
use zkmcp_protocol::{decode, encode, AuditStatus, Envelope};

fn id_string() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9:._-]{1,40}"
}

fn statement() -> impl Strategy<Value = PublicStatement> {
    (
        prop::collection::vec(0u64..512, 1..=8),
        prop::collection::vec(0u64..u64::MAX, 1..=8),
    )
        .prop_map(|(counts, hash_seeds)| PublicStatement {
            counts,
            hashes: hash_seeds
                .into_iter()
                .map(|s| fr_from_decimal(&s.to_string()).unwrap())
                .collect(),
        })
}

fn proof_envelope() -> impl Strategy<Value = ProofEnvelope> {
    (id_string(), id_string(), 0u32..10, prop::collection::vec(any::<u8>(), 0..256)).prop_map(
        |(backend_id, hash_params_id, version, payload)| ProofEnvelope {
            backend_id,
            hash_params_id,
            version,
            payload,
        },
    )
}

fn envelope() -> impl Strategy<Value = Envelope> {
    prop_oneof![
        (id_string(), id_string(), id_string()).prop_map(|(s_id, initiator, peer)| {
            Envelope::SessionStart { s_id, initiator, peer }
        }),
        (id_string(), statement(), proof_envelope(), id_string(), 0u64..16).prop_map(
            |(s_id, statement, proof, submitter, filler_count)| Envelope::AuditRequest {
                s_id,
                statement,
                proof,
                submitter,
                filler_count,
            }
        ),
        id_string().prop_map(|s_id| Envelope::SessionClose { s_id }),
        id_string().prop_map(|s_id| Envelope::Ack { s_id }),
        (id_string(), prop::bool::ANY, prop::option::of(id_string())).prop_map(
            |(s_id, verified, reason)| Envelope::AuditResult {
                s_id,
                status: if verified { AuditStatus::Verified } else { AuditStatus::Rejected },
                reason,
            }
        ),
        (id_string(), id_string(), ".{0,80}").prop_map(|(s_id, code, message)| {
            Envelope::Error { s_id, code, message }
        }),
    ]
}

proptest! {
    #[test]
    fn encode_decode_is_identity(env in envelope()) {
        let line = encode(&env);
        prop_assert!(!line.contains('\n'));
        let back = decode(&line).unwrap();
        prop_assert_eq!(back, env);
    }
}
