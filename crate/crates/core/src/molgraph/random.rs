//! Random valid molecules for fuzzing and property tests.

use rand::Rng;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, Molecule};

fn max_valence(e: Element) -> i32 {
    match e {
        Element::C => 4,
        Element::N => 3,
        Element::O | Element::S => 2,
        Element::B => 3,
        Element::P => 3,
        _ => 1,
    }
}

/// Random connected molecule with `1..=max_atoms` heavy atoms (a benzene
/// ring counts as six). Always satisfies every [`Molecule`] invariant.
pub fn random_molecule<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> Molecule {
    let max_atoms = max_atoms.max(1);
    loop {
        if let Some(m) = attempt(rng, max_atoms) {
            return m;
        }
    }
}

fn attempt<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> Option<Molecule> {
    const POOL: [Element; 8] = [
        Element::C,
        Element::C,
        Element::C,
        Element::N,
        Element::O,
        Element::S,
        Element::F,
        Element::Cl,
    ];
    let target = rng.random_range(1..=max_atoms);
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut free: Vec<i32> = Vec::new();

    if target >= 6 && rng.random_bool(0.35) {
        for i in 0..6 {
            let mut a = Atom::new(Element::C);
            a.aromatic = true;
            atoms.push(a);
            free.push(1);
            bonds.push(Bond {
                a: i,
                b: (i + 1) % 6,
                order: BondOrder::Aromatic,
            });
        }
    } else {
        let e = POOL[rng.random_range(0..POOL.len())];
        atoms.push(Atom::new(e));
        free.push(max_valence(e));
    }

    while atoms.len() < target {
        let open: Vec<usize> = (0..atoms.len()).filter(|&i| free[i] > 0).collect();
        if open.is_empty() {
            break;
        }
        let host = open[rng.random_range(0..open.len())];
        let e = POOL[rng.random_range(0..POOL.len())];
        let cap = free[host].min(max_valence(e));
        let order = match rng.random_range(0..20) {
            0 if cap >= 3 => BondOrder::Triple,
            1..=3 if cap >= 2 => BondOrder::Double,
            _ => BondOrder::Single,
        };
        let v = order.valence();
        let idx = atoms.len();
        atoms.push(Atom::new(e));
        free.push(max_valence(e) - v);
        free[host] -= v;
        bonds.push(Bond { a: host, b: idx, order });
    }

    let closures = rng.random_range(0..=2);
    for _ in 0..closures {
        let open: Vec<usize> = (0..atoms.len()).filter(|&i| free[i] > 0).collect();
        if open.len() < 2 {
            break;
        }
        let a = open[rng.random_range(0..open.len())];
        let b = open[rng.random_range(0..open.len())];
        if a == b || bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            continue;
        }
        bonds.push(Bond {
            a,
            b,
            order: BondOrder::Single,
        });
        free[a] -= 1;
        free[b] -= 1;
    }

    let mut mol = Molecule::new_unchecked_valence(atoms, bonds).ok()?;
    for i in 0..mol.atom_count() {
        let h = mol.implicit_hydrogens(i)?;
        mol.set_hydrogens(i, h);
    }
    Molecule::new(mol.atoms().to_vec(), mol.bonds().to_vec()).ok()
}
