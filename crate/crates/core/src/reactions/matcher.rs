//! Substructure search: label-compatible subgraph monomorphisms of a
//! pattern into a molecule, by VF2-style backtracking along a connected
//! search order.

use crate::molgraph::{canonical_ranks, Molecule};

use super::pattern::Pattern;

/// One embedding: `embedding[pattern_atom] = molecule_atom`.
pub type Embedding = Vec<usize>;

struct Search<'a> {
    pattern: &'a Pattern,
    mol: &'a Molecule,
    /// Molecule atoms in candidate order.
    rank: Option<&'a [usize]>,
    image: Vec<usize>,
    used: Vec<bool>,
}

const UNSET: usize = usize::MAX;

impl Search<'_> {
    fn compatible(&self, p: usize, m: usize) -> bool {
        if self.used[m] || !self.pattern.atoms()[p].matches(self.mol, m) {
            return false;
        }
        // Every pattern bond to an already-placed atom must exist with a matching order.
        self.pattern.neighbors(p).iter().all(|&(q, bi)| {
            let img = self.image[q];
            img == UNSET
                || self
                    .mol
                    .bond_between(m, img)
                    .is_some_and(|b| self.pattern.bonds()[bi].kind.matches(b.order))
        })
    }

    fn candidates(&self, depth: usize) -> Vec<usize> {
        let (_, parent) = self.pattern.search_order()[depth];
        let mut c: Vec<usize> = match parent {
            None => (0..self.mol.atom_count()).collect(),
            Some(pp) => self.mol.neighbors(self.image[pp]).iter().map(|&(j, _)| j).collect(),
        };
        match self.rank {
            Some(r) => c.sort_by_key(|&i| r[i]),
            None => c.sort_unstable(),
        }
        c
    }

    /// Depth-first enumeration; the callback returns `false` to stop.
    fn run(&mut self, depth: usize, emit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if depth == self.pattern.atom_count() {
            return emit(&self.image);
        }
        let (p, _) = self.pattern.search_order()[depth];
        for m in self.candidates(depth) {
            if self.compatible(p, m) {
                self.image[p] = m;
                self.used[m] = true;
                let go_on = self.run(depth + 1, emit);
                self.used[m] = false;
                self.image[p] = UNSET;
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
}

fn search<'a>(pattern: &'a Pattern, mol: &'a Molecule, rank: Option<&'a [usize]>) -> Search<'a> {
    Search {
        pattern,
        mol,
        rank,
        image: vec![UNSET; pattern.atom_count()],
        used: vec![false; mol.atom_count()],
    }
}

/// All embeddings, enumerated with candidates in canonical-rank order.
pub fn match_pattern(pattern: &Pattern, mol: &Molecule) -> Vec<Embedding> {
    let ranks = canonical_ranks(mol);
    let mut out = Vec::new();
    if pattern.atom_count() <= mol.atom_count() {
        search(pattern, mol, Some(&ranks)).run(0, &mut |e| {
            out.push(e.to_vec());
            true
        });
    }
    out
}

/// Whether at least one embedding exists. Skips ranking.
pub fn has_match(pattern: &Pattern, mol: &Molecule) -> bool {
    if pattern.atom_count() > mol.atom_count() {
        return false;
    }
    let mut found = false;
    search(pattern, mol, None).run(0, &mut |_| {
        found = true;
        false
    });
    found
}
