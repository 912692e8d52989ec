//! Scalar-field helpers.
//!
//! All public values (counts, digests) live in the BN254 scalar field, a
//! 254-bit prime field. Elements cross serialization boundaries as decimal
//! strings in canonical reduced form.

use ark_ff::{BigInteger, PrimeField};
use num_bigint::BigUint;
use thiserror::Error;

/// The proof-system scalar field.
pub type Fr = ark_bn254::Fr;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("not a decimal field element: {0:?}")]
    Parse(String),
    #[error("value is not in canonical reduced form")]
    NotCanonical,
}

/// Canonical decimal rendering of a field element.
pub fn fr_to_decimal(value: &Fr) -> String {
    BigUint::from_bytes_be(&value.into_bigint().to_bytes_be()).to_string()
}

/// Parses a decimal string, rejecting values at or above the field modulus
/// so only canonical reduced representations round-trip.
pub fn fr_from_decimal(text: &str) -> Result<Fr, FieldError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FieldError::Parse(text.to_string()));
    }
    let value: BigUint = text.parse().map_err(|_| FieldError::Parse(text.to_string()))?;
    let modulus = BigUint::from_bytes_be(&Fr::MODULUS.to_bytes_be());
    if value >= modulus {
        return Err(FieldError::NotCanonical);
    }
    Ok(Fr::from_be_bytes_mod_order(&value.to_bytes_be()))
}

/// Serde adapter rendering `Vec<Fr>` as decimal strings.
pub mod decimal_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[Fr], ser: S) -> Result<S::Ok, S::Error> {
        values.iter().map(fr_to_decimal).collect::<Vec<_>>().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Fr>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .iter()
            .map(|s| fr_from_decimal(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        let v = Fr::from(123456789u64);
        assert_eq!(fr_from_decimal(&fr_to_decimal(&v)).unwrap(), v);
    }

    #[test]
    fn rejects_modulus_and_above() {
        let modulus = "21888242871839275222246405745257275088548364400416034343698204186575808495617";
        assert_eq!(fr_from_decimal(modulus), Err(FieldError::NotCanonical));
        let below = "21888242871839275222246405745257275088548364400416034343698204186575808495616";
        assert!(fr_from_decimal(below).is_ok());
    }

    #[test]
    fn rejects_non_digits() {
        assert!(fr_from_decimal("12ab").is_err());
        assert!(fr_from_decimal("").is_err());
        assert!(fr_from_decimal("-5").is_err());
    }
}
