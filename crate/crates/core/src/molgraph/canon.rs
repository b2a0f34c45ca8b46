//! Canonical atom ranking and canonical SMILES output.

use super::molecule::{BondOrder, Molecule};

/// Dense ranks of `keys` (equal keys share a rank, ranks start at 0).
fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

/// Iterates neighbourhood refinement until the partition stops splitting.
fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, bi)| (mol.bonds()[bi].order.code(), ranks[j]))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        if class_count(&next) == class_count(&ranks) {
            return next;
        }
        ranks = next;
    }
}

/// Canonical ranks: a permutation of `0..n` that depends only on the graph.
///
/// Atoms start from an invariant tuple (element, aromaticity, degree,
/// hydrogens, charge, map). The partition is refined by neighbour classes
/// until stable; remaining ties are broken by promoting one atom of the
/// lowest tied class and refining again.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    let initial: Vec<(u8, bool, usize, u8, i8, u16)> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element.atomic_number(),
                a.aromatic,
                mol.degree(i),
                a.hydrogens,
                a.charge,
                a.map.unwrap_or(0),
            )
        })
        .collect();
    let mut ranks = refine(mol, dense_ranks(&initial));
    while class_count(&ranks) < n {
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r] += 1;
        }
        let tied = (0..n).find(|&r| sizes[r] > 1).expect("a tied class exists");
        let chosen = (0..n).find(|&i| ranks[i] == tied).expect("class member");
        let split: Vec<usize> = (0..n)
            .map(|i| 2 * ranks[i] + usize::from(ranks[i] == tied && i != chosen))
            .collect();
        ranks = refine(mol, dense_ranks(&split));
    }
    ranks
}

fn bond_symbol(mol: &Molecule, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = mol.atom(a).aromatic && mol.atom(b).aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn atom_text(mol: &Molecule, i: usize) -> String {
    let a = mol.atom(i);
    let sym = if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    };
    let organic_ok = a.charge == 0
        && a.map.is_none()
        && (!a.aromatic || a.element.can_be_aromatic())
        && mol.implicit_hydrogens(i) == Some(a.hydrogens);
    if organic_ok {
        return sym;
    }
    let mut s = String::from("[");
    s.push_str(&sym);
    match a.hydrogens {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        q if q > 0 => s.push_str(&format!("+{q}")),
        q => s.push_str(&format!("-{}", -q)),
    }
    if let Some(m) = a.map {
        s.push_str(&format!(":{m}"));
    }
    s.push(']');
    s
}

fn ring_label(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

struct Writer<'m> {
    mol: &'m Molecule,
    ranks: Vec<usize>,
    visited: Vec<bool>,
    /// Ring-closure bonds found by the first DFS, per atom: (partner, bond index, opens here).
    ring_ends: Vec<Vec<(usize, usize, bool)>>,
    children: Vec<Vec<(usize, usize)>>,
}

impl<'m> Writer<'m> {
    fn sorted_neighbors(&self, a: usize) -> Vec<(usize, usize)> {
        let mut nb = self.mol.neighbors(a).to_vec();
        nb.sort_by_key(|&(j, _)| self.ranks[j]);
        nb
    }

    fn plan(&mut self, a: usize, parent_bond: Option<usize>, used: &mut [bool]) {
        self.visited[a] = true;
        for (j, bi) in self.sorted_neighbors(a) {
            if Some(bi) == parent_bond || used[bi] {
                continue;
            }
            used[bi] = true;
            if self.visited[j] {
                self.ring_ends[j].push((a, bi, true));
                self.ring_ends[a].push((j, bi, false));
            } else {
                self.children[a].push((j, bi));
                self.plan(j, Some(bi), used);
            }
        }
    }

    fn emit(&self, a: usize, out: &mut String, open: &mut Vec<Option<usize>>) {
        out.push_str(&atom_text(self.mol, a));
        let mut ends = self.ring_ends[a].clone();
        ends.sort_by_key(|&(j, _, opens)| (opens, self.ranks[j]));
        let mut closed = Vec::new();
        for (j, bi, opens) in ends {
            if opens {
                let digit = (1..)
                    .find(|&d| open.get(d).is_none_or(|slot| slot.is_none()) && !closed.contains(&d))
                    .expect("free ring digit");
                if open.len() <= digit {
                    open.resize(digit + 1, None);
                }
                open[digit] = Some(bi);
                out.push_str(bond_symbol(self.mol, a, j, self.mol.bonds()[bi].order));
                out.push_str(&ring_label(digit));
            } else {
                let digit = open
                    .iter()
                    .position(|slot| *slot == Some(bi))
                    .expect("ring bond was opened");
                out.push_str(&ring_label(digit));
                closed.push(digit);
            }
        }
        for d in closed {
            open[d] = None;
        }
        let kids = &self.children[a];
        for (k, &(j, bi)) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(bond_symbol(self.mol, a, j, self.mol.bonds()[bi].order));
            self.emit(j, out, open);
            if !last {
                out.push(')');
            }
        }
    }
}

/// Deterministic SMILES: equal for isomorphic inputs, and parses back to a
/// graph isomorphic to `mol`.
pub fn write_canonical_smiles(mol: &Molecule) -> String {
    let ranks = canonical_ranks(mol);
    let n = mol.atom_count();
    let start = (0..n).min_by_key(|&i| ranks[i]).expect("nonempty molecule");
    let mut w = Writer {
        mol,
        ranks,
        visited: vec![false; n],
        ring_ends: vec![Vec::new(); n],
        children: vec![Vec::new(); n],
    };
    let mut used = vec![false; mol.bond_count()];
    w.plan(start, None, &mut used);
    let mut out = String::new();
    let mut open = vec![None];
    w.emit(start, &mut out, &mut open);
    out
}
