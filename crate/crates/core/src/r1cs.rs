//! Sparse rank-1 constraint machinery.
//!
//! Wires are indexed globally: `0..num_public` are the public inputs, the
//! rest are witness wires. A [`Lc`] is a sparse linear combination of wires
//! plus a constant term; a [`Constraint`] asserts `⟨a,z⟩ · ⟨b,z⟩ = ⟨c,z⟩`
//! over the full assignment `z`.

use crate::field::Fr;
use ark_ff::{Field, Zero};

/// Sparse linear combination: `constant + Σ coeff·wire`. Terms stay sorted
/// by wire index with no duplicates or zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lc {
    pub terms: Vec<(usize, Fr)>,
    pub constant: Fr,
}

impl Lc {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: Fr) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn wire(index: usize) -> Self {
        Self { terms: vec![(index, Fr::ONE)], constant: Fr::zero() }
    }

    pub fn term(index: usize, coeff: Fr) -> Self {
        if coeff.is_zero() {
            Self::zero()
        } else {
            Self { terms: vec![(index, coeff)], constant: Fr::zero() }
        }
    }

    pub fn add_constant(&mut self, value: Fr) {
        self.constant += value;
    }

    /// Adds `coeff·wire`, merging into the sorted term list.
    pub fn add_term(&mut self, index: usize, coeff: Fr) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.binary_search_by_key(&index, |(w, _)| *w) {
            Ok(pos) => {
                self.terms[pos].1 += coeff;
                if self.terms[pos].1.is_zero() {
                    self.terms.remove(pos);
                }
            }
            Err(pos) => self.terms.insert(pos, (index, coeff)),
        }
    }

    pub fn add_scaled(&mut self, other: &Lc, scale: Fr) {
        if scale.is_zero() {
            return;
        }
        self.constant += other.constant * scale;
        for &(w, c) in &other.terms {
            self.add_term(w, c * scale);
        }
    }

    pub fn add(&mut self, other: &Lc) {
        self.add_scaled(other, Fr::ONE);
    }

    pub fn scale(&mut self, factor: Fr) {
        if factor.is_zero() {
            *self = Self::zero();
            return;
        }
        self.constant *= factor;
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
    }

    /// Evaluates against the split assignment.
    pub fn eval(&self, public: &[Fr], witness: &[Fr]) -> Fr {
        let mut acc = self.constant;
        for &(w, c) in &self.terms {
            let v = if w < public.len() { public[w] } else { witness[w - public.len()] };
            acc += c * v;
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

/// One rank-1 constraint `⟨a,z⟩ · ⟨b,z⟩ = ⟨c,z⟩`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub a: Lc,
    pub b: Lc,
    pub c: Lc,
}

impl Constraint {
    pub fn holds(&self, public: &[Fr], witness: &[Fr]) -> bool {
        self.a.eval(public, witness) * self.b.eval(public, witness)
            == self.c.eval(public, witness)
    }
}

/// Enforces `lc = value` as a rank-1 constraint.
pub fn eq_constant(lc: Lc, value: Fr) -> Constraint {
    Constraint { a: lc, b: Lc::constant(Fr::ONE), c: Lc::constant(value) }
}

/// Enforces `lc = wire`.
pub fn eq_wire(lc: Lc, wire: usize) -> Constraint {
    Constraint { a: lc, b: Lc::constant(Fr::ONE), c: Lc::wire(wire) }
}

/// Enforces `wire ∈ {0, 1}` via `wire · (wire − 1) = 0`.
pub fn boolean(wire: usize) -> Constraint {
    let mut b = Lc::wire(wire);
    b.add_constant(-Fr::ONE);
    Constraint { a: Lc::wire(wire), b, c: Lc::zero() }
}
