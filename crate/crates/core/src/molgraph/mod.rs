//! Molecular graphs: SMILES subset I/O, canonical forms, fingerprints and
//! descriptors.

mod canon;
mod descriptors;
mod element;
mod fingerprint;
mod molecule;
pub mod random;
mod smiles;

use thiserror::Error;

pub use canon::{canonical_ranks, write_canonical_smiles};
pub use descriptors::{descriptors, DescriptorKind, Descriptors};
pub use element::Element;
pub use fingerprint::{cosine, dense_bits, morgan_fingerprint, tanimoto, tanimoto_bits, Fingerprint, FingerprintSpec};
pub use molecule::{Atom, Bond, BondOrder, Molecule};
pub use smiles::parse_smiles;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MolError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported feature at position {pos}: {feature}")]
    Unsupported { pos: usize, feature: &'static str },
    #[error("valence violation at atom {atom} ({element})")]
    Valence { atom: usize, element: &'static str },
    #[error("molecule has more than one connected component")]
    Disconnected,
    #[error("invalid bond {a}-{b}: {reason}")]
    Bond { a: usize, b: usize, reason: &'static str },
    #[error("empty molecule")]
    Empty,
    #[error("fingerprint length {0} is not a power of two >= 64")]
    FingerprintLength(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Parses and returns the canonical SMILES in one step.
pub fn canonicalize(smiles: &str) -> Result<String, MolError> {
    parse_smiles(smiles).map(|m| write_canonical_smiles(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shuffled(m: &Molecule, seed: u64) -> Molecule {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..m.atom_count()).collect();
        perm.shuffle(&mut rng);
        let mut bonds: Vec<Bond> = m
            .bonds()
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                order: b.order,
            })
            .collect();
        bonds.shuffle(&mut rng);
        let mut atoms = m.atoms().to_vec();
        for (i, a) in m.atoms().iter().enumerate() {
            atoms[perm[i]] = a.clone();
        }
        Molecule::new(atoms, bonds).unwrap()
    }

    /// Atom-and-bond structure relabelled by canonical rank.
    fn canonical_graph(m: &Molecule) -> (Vec<Atom>, Vec<(usize, usize, BondOrder)>) {
        let r = canonical_ranks(m);
        let mut atoms = m.atoms().to_vec();
        for (i, a) in m.atoms().iter().enumerate() {
            atoms[r[i]] = a.clone();
        }
        let mut bonds: Vec<_> = m
            .bonds()
            .iter()
            .map(|b| {
                let (x, y) = (r[b.a].min(r[b.b]), r[b.a].max(r[b.b]));
                (x, y, b.order)
            })
            .collect();
        bonds.sort();
        (atoms, bonds)
    }

    #[test]
    fn writer_round_trip_on_random_molecules() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = random_molecule(&mut rng, 14);
            let s = write_canonical_smiles(&m);
            let back = parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!(canonical_graph(&back), canonical_graph(&m), "{s}");
            assert_eq!(write_canonical_smiles(&back), s);
        }
    }

    #[test]
    fn ranks_invariant_under_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..500 {
            let m = random_molecule(&mut rng, 12);
            let p = shuffled(&m, trial);
            assert_eq!(canonical_graph(&m), canonical_graph(&p));
            assert_eq!(write_canonical_smiles(&m), write_canonical_smiles(&p));
        }
    }

    use random::random_molecule;

    proptest! {
        #[test]
        fn tanimoto_symmetric_and_bounded(seed_a in any::<u64>(), seed_b in any::<u64>()) {
            let ma = random_molecule(&mut ChaCha8Rng::seed_from_u64(seed_a), 10);
            let mb = random_molecule(&mut ChaCha8Rng::seed_from_u64(seed_b), 10);
            let fa = morgan_fingerprint(&ma, 2, 256).unwrap();
            let fb = morgan_fingerprint(&mb, 2, 256).unwrap();
            let ab = tanimoto(&fa, &fb).unwrap();
            prop_assert_eq!(ab, tanimoto(&fb, &fa).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(tanimoto(&fa, &fa).unwrap(), 1.0);
        }

        #[test]
        fn fingerprint_permutation_invariant(seed in any::<u64>()) {
            let m = random_molecule(&mut ChaCha8Rng::seed_from_u64(seed), 12);
            let p = shuffled(&m, seed ^ 0x55);
            prop_assert_eq!(morgan_fingerprint(&m, 2, 512).unwrap(), morgan_fingerprint(&p, 2, 512).unwrap());
        }
    }
}
