use serde::{Deserialize, Serialize};

/// Elements admitted by the SMILES subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

pub const HYDROGEN_MASS: f64 = 1.008;

impl Element {
    pub const ALL: [Element; 10] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Element::ALL.into_iter().find(|e| e.symbol() == s)
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        Element::ALL.into_iter().find(|e| e.atomic_number() == z)
    }

    /// Standard atomic weight in amu.
    pub fn mass(self) -> f64 {
        match self {
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    /// Neutral-atom valences, ascending.
    fn base_valences(self) -> &'static [i32] {
        match self {
            Element::B => &[3],
            Element::C => &[4],
            Element::N | Element::P => &[3, 5],
            Element::O => &[2],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    /// Allowed total valences (bond orders plus hydrogens) at a formal charge.
    ///
    /// Carbon loses one bond per unit of charge either way, boron behaves as
    /// its isoelectronic neighbour, and lone-pair elements gain a bond per
    /// positive charge and lose one per negative charge.
    pub fn allowed_valences(self, charge: i8) -> Vec<i32> {
        let q = i32::from(charge);
        let mut out: Vec<i32> = match self {
            Element::C => vec![4 - q.abs()],
            Element::B => vec![3 - q],
            _ => self.base_valences().iter().map(|v| v + q).collect(),
        };
        out.retain(|&v| v >= 0);
        out
    }

    /// Has a lowercase aromatic form in the grammar.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self, Element::C | Element::N | Element::O | Element::S)
    }

    /// Whether an aromatic atom of this element shares a ring double bond.
    /// Chalcogens donate a lone pair instead.
    pub fn aromatic_double_donor(self) -> bool {
        matches!(self, Element::C | Element::N | Element::B | Element::P)
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charged_valences() {
        assert_eq!(Element::N.allowed_valences(1), vec![4, 6]);
        assert_eq!(Element::O.allowed_valences(-1), vec![1]);
        assert_eq!(Element::C.allowed_valences(-1), vec![3]);
        assert_eq!(Element::B.allowed_valences(-1), vec![4]);
        assert_eq!(Element::Cl.allowed_valences(-1), vec![0]);
    }

    #[test]
    fn symbol_round_trip() {
        for e in Element::ALL {
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
            assert_eq!(Element::from_atomic_number(e.atomic_number()), Some(e));
        }
    }
}
