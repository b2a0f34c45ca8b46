use serde::{Deserialize, Serialize};

use super::element::Element;
use super::MolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer contribution to an atom's valence. Aromatic bonds count one;
    /// the shared ring double bond is added per atom (see [`Molecule::valence_sum`]).
    pub fn valence(self) -> i32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Stable small code used by ranks and fingerprint hashing.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Attached hydrogens. Always explicit on the value: organic-subset atoms
    /// have their implicit count resolved at parse time.
    pub hydrogens: u8,
    pub map: Option<u16>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Self {
            element,
            charge: 0,
            aromatic: false,
            hydrogens: 0,
            map: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Connected, valence-checked molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbour, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    /// Builds and validates a molecule: no self-loops or duplicate bonds,
    /// valences within the element table, one connected component.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, MolError> {
        let mol = Self::new_unchecked_valence(atoms, bonds)?;
        for i in 0..mol.atoms.len() {
            if !mol.valence_ok(i) {
                return Err(MolError::Valence {
                    atom: i,
                    element: mol.atoms[i].element.symbol(),
                });
            }
        }
        if !mol.is_connected() {
            return Err(MolError::Disconnected);
        }
        Ok(mol)
    }

    /// Graph checks only; used by the parser before hydrogens are resolved.
    pub(crate) fn new_unchecked_valence(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, MolError> {
        if atoms.is_empty() {
            return Err(MolError::Empty);
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(MolError::Bond {
                    a: bond.a,
                    b: bond.b,
                    reason: "endpoint out of range",
                });
            }
            if bond.a == bond.b {
                return Err(MolError::Bond {
                    a: bond.a,
                    b: bond.b,
                    reason: "self-loop",
                });
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(MolError::Bond {
                    a: bond.a,
                    b: bond.b,
                    reason: "duplicate bond",
                });
            }
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        Ok(Self {
            atoms,
            bonds,
            adjacency,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// (neighbour, bond index) pairs of atom `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    /// Sum of integer bond valences at atom `i`, and the number of aromatic bonds.
    pub fn valence_sum(&self, i: usize) -> (i32, usize) {
        let mut sum = 0;
        let mut arom = 0;
        for &(_, bi) in &self.adjacency[i] {
            let order = self.bonds[bi].order;
            sum += order.valence();
            if order == BondOrder::Aromatic {
                arom += 1;
            }
        }
        (sum, arom)
    }

    /// Candidate bond-valence totals (without hydrogens) for atom `i`.
    /// An aromatic atom may or may not carry the shared ring double bond.
    fn bond_valence_options(&self, i: usize) -> (i32, Option<i32>) {
        let (sum, arom) = self.valence_sum(i);
        let atom = &self.atoms[i];
        if atom.aromatic && arom > 0 && atom.element.aromatic_double_donor() {
            (sum + 1, Some(sum))
        } else {
            (sum, None)
        }
    }

    pub fn valence_ok(&self, i: usize) -> bool {
        let atom = &self.atoms[i];
        let allowed = atom.element.allowed_valences(atom.charge);
        let h = i32::from(atom.hydrogens);
        let (primary, alt) = self.bond_valence_options(i);
        allowed.contains(&(primary + h)) || alt.is_some_and(|a| allowed.contains(&(a + h)))
    }

    /// Hydrogen count an unbracketed atom at position `i` would receive.
    /// `None` when no allowed valence fits the bonds.
    pub fn implicit_hydrogens(&self, i: usize) -> Option<u8> {
        let atom = &self.atoms[i];
        let allowed = atom.element.allowed_valences(atom.charge);
        let (primary, alt) = self.bond_valence_options(i);
        // Lowest allowed valence wins; at equal valence the ring-double form is preferred.
        allowed.iter().find_map(|&v| {
            if v >= primary {
                Some((v - primary) as u8)
            } else {
                alt.filter(|&a| v >= a).map(|a| (v - a) as u8)
            }
        })
    }

    pub(crate) fn set_hydrogens(&mut self, i: usize, h: u8) {
        self.atoms[i].hydrogens = h;
    }

    pub fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for &(nb, _) in &self.adjacency[a] {
                if !seen[nb] {
                    seen[nb] = true;
                    count += 1;
                    stack.push(nb);
                }
            }
        }
        count == n
    }

    /// Cycle rank: bonds − atoms + 1 for a connected graph.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + 1 - self.atoms.len()
    }

    /// Copy with every atom-map index removed.
    pub fn without_maps(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.map = None;
        }
        m
    }

    /// Relabels atoms: atom `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Molecule {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![self.atoms[0].clone(); self.atoms.len()];
        for (i, a) in self.atoms.iter().enumerate() {
            atoms[perm[i]] = a.clone();
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                order: b.order,
            })
            .collect();
        Molecule::new(atoms, bonds).expect("permutation preserves validity")
    }
}
