use serde::{Deserialize, Serialize};

use super::element::{Element, HYDROGEN_MASS};
use super::molecule::Molecule;

/// Cheap whole-molecule descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptors {
    pub heavy_atoms: usize,
    /// Cycle rank (bonds − atoms + 1).
    pub rings: usize,
    /// Non-carbon heavy atoms over heavy atoms.
    pub hetero_fraction: f64,
    pub mol_weight: f64,
}

pub fn descriptors(mol: &Molecule) -> Descriptors {
    let heavy = mol.atom_count();
    let hetero = mol.atoms().iter().filter(|a| a.element != Element::C).count();
    let mol_weight = mol
        .atoms()
        .iter()
        .map(|a| a.element.mass() + f64::from(a.hydrogens) * HYDROGEN_MASS)
        .sum();
    Descriptors {
        heavy_atoms: heavy,
        rings: mol.ring_count(),
        hetero_fraction: hetero as f64 / heavy as f64,
        mol_weight,
    }
}

/// Named scalar view, for reports that iterate descriptors generically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    HeavyAtoms,
    Rings,
    HeteroFraction,
    MolWeight,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 4] = [
        DescriptorKind::HeavyAtoms,
        DescriptorKind::Rings,
        DescriptorKind::HeteroFraction,
        DescriptorKind::MolWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::HeavyAtoms => "heavy_atoms",
            DescriptorKind::Rings => "rings",
            DescriptorKind::HeteroFraction => "hetero_fraction",
            DescriptorKind::MolWeight => "mol_weight",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn value(self, d: &Descriptors) -> f64 {
        match self {
            DescriptorKind::HeavyAtoms => d.heavy_atoms as f64,
            DescriptorKind::Rings => d.rings as f64,
            DescriptorKind::HeteroFraction => d.hetero_fraction,
            DescriptorKind::MolWeight => d.mol_weight,
        }
    }
}
