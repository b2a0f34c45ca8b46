//! Boolean Morgan (circular) fingerprints, Tanimoto and cosine similarity.

use serde::{Deserialize, Serialize};

use super::molecule::Molecule;
use super::MolError;
use crate::bits::BitSet;
use crate::hash::Fnv64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    bits: BitSet,
    radius: u32,
}

impl Fingerprint {
    pub fn from_bits(bits: BitSet, radius: u32) -> Self {
        Self { bits, radius }
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    pub fn into_bits(self) -> BitSet {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.any()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// 0/1 dense vector for network input and k-NN rows.
    pub fn to_dense<T: Scalar>(&self) -> Vec<T> {
        dense_bits(&self.bits)
    }
}

pub fn dense_bits<T: Scalar>(bits: &BitSet) -> Vec<T> {
    let mut v = vec![T::zero(); bits.len()];
    for i in bits.ones() {
        v[i] = T::one();
    }
    v
}

/// Length/radius pair a fingerprint is computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FingerprintSpec {
    pub nbits: usize,
    pub radius: u32,
}

impl FingerprintSpec {
    pub const fn new(nbits: usize, radius: u32) -> Self {
        Self { nbits, radius }
    }

    pub fn compute(&self, mol: &Molecule) -> Fingerprint {
        morgan_fingerprint(mol, self.radius, self.nbits).expect("spec validated at construction")
    }

    pub fn validate(&self) -> Result<(), MolError> {
        if self.nbits < 64 || !self.nbits.is_power_of_two() {
            return Err(MolError::FingerprintLength(self.nbits));
        }
        Ok(())
    }
}

/// Circular fingerprint: every atom environment of radius `0..=radius` is
/// hashed with FNV-1a 64 and sets bit `hash mod nbits`.
///
/// Round 0 hashes (round, atomic number, charge, degree, hydrogens,
/// aromatic). Round `r` hashes (round, own previous identifier, neighbour
/// count, then the sorted (bond code, neighbour previous identifier) pairs).
pub fn morgan_fingerprint(mol: &Molecule, radius: u32, nbits: usize) -> Result<Fingerprint, MolError> {
    FingerprintSpec::new(nbits, radius).validate()?;
    let n = mol.atom_count();
    let mut bits = BitSet::new(nbits);
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            let mut h = Fnv64::new();
            h.write_u32(0);
            h.write_u8(a.element.atomic_number());
            h.write_i32(i32::from(a.charge));
            h.write_u32(mol.degree(i) as u32);
            h.write_u8(a.hydrogens);
            h.write_u8(u8::from(a.aromatic));
            h.finish()
        })
        .collect();
    for &id in &ids {
        bits.set((id % nbits as u64) as usize, true);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut env: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, bi)| (mol.bonds()[bi].order.code(), ids[j]))
                    .collect();
                env.sort_unstable();
                let mut h = Fnv64::new();
                h.write_u32(round);
                h.write_u64(ids[i]);
                h.write_u32(env.len() as u32);
                for (code, id) in env {
                    h.write_u8(code);
                    h.write_u64(id);
                }
                h.finish()
            })
            .collect();
        ids = next;
        for &id in &ids {
            bits.set((id % nbits as u64) as usize, true);
        }
    }
    Ok(Fingerprint { bits, radius })
}

/// |a ∧ b| / |a ∨ b|; zero when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, MolError> {
    if a.len() != b.len() || a.radius != b.radius {
        return Err(MolError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(tanimoto_bits(&a.bits, &b.bits))
}

/// Tanimoto on raw bit vectors of equal length.
pub fn tanimoto_bits(a: &BitSet, b: &BitSet) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 0.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

/// a·b / (‖a‖‖b‖); zero when either norm is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T, MolError> {
    if a.len() != b.len() {
        return Err(MolError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return Ok(T::zero());
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}
