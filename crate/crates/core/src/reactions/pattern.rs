//! Query graphs for the reaction-pattern grammar.
//!
//! A strict SMARTS subset. Atoms: organic symbols (`C`, `c`, `Cl` ...) or
//! bracket expressions combining, with `;`/`&` or juxtaposition, one
//! element class (`C` aliphatic, `c` aromatic, `#6` either), and optional
//! `D<n>` degree, `H<n>` hydrogen count, `+`/`-`/`+<n>` charge, then an
//! optional `:<n>` atom map. Bonds: `- = # :` and `~` (any); an unwritten
//! bond matches single or aromatic. Branches and ring closures as in SMILES.

use std::collections::BTreeMap;

use crate::molgraph::{Atom, BondOrder, Element, Molecule};

use super::ReactionError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAtom {
    pub element: Element,
    /// `None` matches aromatic and aliphatic forms.
    pub aromatic: Option<bool>,
    pub charge: Option<i8>,
    pub degree: Option<u8>,
    pub hydrogens: Option<u8>,
    pub map: Option<u16>,
}

impl PatternAtom {
    pub fn matches(&self, mol: &Molecule, i: usize) -> bool {
        let a: &Atom = mol.atom(i);
        a.element == self.element
            && self.aromatic.is_none_or(|x| x == a.aromatic)
            && self.charge.is_none_or(|q| q == a.charge)
            && self.hydrogens.is_none_or(|h| h == a.hydrogens)
            && self.degree.is_none_or(|d| usize::from(d) == mol.degree(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternBondKind {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    /// Written without a symbol: single or aromatic when matching.
    Implicit,
}

impl PatternBondKind {
    pub fn matches(self, order: BondOrder) -> bool {
        match self {
            PatternBondKind::Single => order == BondOrder::Single,
            PatternBondKind::Double => order == BondOrder::Double,
            PatternBondKind::Triple => order == BondOrder::Triple,
            PatternBondKind::Aromatic => order == BondOrder::Aromatic,
            PatternBondKind::Any => true,
            PatternBondKind::Implicit => matches!(order, BondOrder::Single | BondOrder::Aromatic),
        }
    }

    /// Concrete order when the bond is written explicitly.
    pub fn explicit_order(self) -> Option<BondOrder> {
        match self {
            PatternBondKind::Single => Some(BondOrder::Single),
            PatternBondKind::Double => Some(BondOrder::Double),
            PatternBondKind::Triple => Some(BondOrder::Triple),
            PatternBondKind::Aromatic => Some(BondOrder::Aromatic),
            PatternBondKind::Any | PatternBondKind::Implicit => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternBond {
    pub a: usize,
    pub b: usize,
    pub kind: PatternBondKind,
}

/// Connected query graph with unique atom maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    atoms: Vec<PatternAtom>,
    bonds: Vec<PatternBond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Search order: breadth-first from atom 0, with each atom's discovering parent.
    order: Vec<(usize, Option<usize>)>,
}

impl Pattern {
    pub fn new(atoms: Vec<PatternAtom>, bonds: Vec<PatternBond>) -> Result<Self, ReactionError> {
        if atoms.is_empty() {
            return Err(ReactionError::Syntax {
                pos: 0,
                msg: "empty pattern".into(),
            });
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, b) in bonds.iter().enumerate() {
            if b.a == b.b || b.a >= n || b.b >= n || adjacency[b.a].iter().any(|&(x, _)| x == b.b) {
                return Err(ReactionError::Syntax {
                    pos: 0,
                    msg: format!("invalid pattern bond {}-{}", b.a, b.b),
                });
            }
            adjacency[b.a].push((b.b, bi));
            adjacency[b.b].push((b.a, bi));
        }
        let mut maps: Vec<u16> = atoms.iter().filter_map(|a| a.map).collect();
        maps.sort_unstable();
        if maps.windows(2).any(|w| w[0] == w[1]) {
            return Err(ReactionError::Mapping("duplicate map index within a pattern".into()));
        }
        let mut seen = vec![false; n];
        let mut order = vec![(0, None)];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let (a, _) = order[head];
            head += 1;
            for &(nb, _) in &adjacency[a] {
                if !seen[nb] {
                    seen[nb] = true;
                    order.push((nb, Some(a)));
                }
            }
        }
        if order.len() != n {
            return Err(ReactionError::Syntax {
                pos: 0,
                msg: "pattern is not connected".into(),
            });
        }
        Ok(Self {
            atoms,
            bonds,
            adjacency,
            order,
        })
    }

    pub fn atoms(&self) -> &[PatternAtom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[PatternBond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&PatternBond> {
        self.adjacency[a]
            .iter()
            .find(|&&(x, _)| x == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    pub(crate) fn search_order(&self) -> &[(usize, Option<usize>)] {
        &self.order
    }

    pub fn maps(&self) -> impl Iterator<Item = u16> + '_ {
        self.atoms.iter().filter_map(|a| a.map)
    }

    pub fn atom_with_map(&self, map: u16) -> Option<usize> {
        self.atoms.iter().position(|a| a.map == Some(map))
    }
}

pub fn parse_pattern(text: &str) -> Result<Pattern, ReactionError> {
    PatternParser {
        src: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    }
    .parse()
}

struct PatternParser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<PatternAtom>,
    bonds: Vec<PatternBond>,
}

fn err(pos: usize, msg: impl Into<String>) -> ReactionError {
    ReactionError::Syntax { pos, msg: msg.into() }
}

impl PatternParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn parse(mut self) -> Result<Pattern, ReactionError> {
        if self.src.is_empty() {
            return Err(err(0, "empty pattern"));
        }
        let mut prev: Option<usize> = None;
        let mut pending: Option<(PatternBondKind, usize)> = None;
        let mut branches = Vec::new();
        let mut rings: BTreeMap<u32, (usize, Option<PatternBondKind>)> = BTreeMap::new();
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    let p = prev.ok_or_else(|| err(at, "branch before any atom"))?;
                    if pending.is_some() {
                        return Err(err(at, "bond symbol before branch"));
                    }
                    branches.push(p);
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(err(at, "dangling bond before ')'"));
                    }
                    prev = Some(branches.pop().ok_or_else(|| err(at, "unmatched ')'"))?);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(err(at, "misplaced bond symbol"));
                    }
                    let kind = match c {
                        b'-' => PatternBondKind::Single,
                        b'=' => PatternBondKind::Double,
                        b'#' => PatternBondKind::Triple,
                        b':' => PatternBondKind::Aromatic,
                        _ => PatternBondKind::Any,
                    };
                    pending = Some((kind, at));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let p = prev.ok_or_else(|| err(at, "ring closure before any atom"))?;
                    let label = if c == b'%' {
                        self.pos += 1;
                        let start = self.pos;
                        let n = self.number().ok_or_else(|| err(at, "'%' needs digits"))?;
                        if self.pos - start != 2 {
                            return Err(err(at, "'%' needs two digits"));
                        }
                        n
                    } else {
                        self.pos += 1;
                        u32::from(c - b'0')
                    };
                    let kind = pending.take().map(|x| x.0);
                    match rings.remove(&label) {
                        None => {
                            rings.insert(label, (p, kind));
                        }
                        Some((open, okind)) => {
                            if open == p {
                                return Err(err(at, "ring closure onto the same atom"));
                            }
                            let kind = match (okind, kind) {
                                (Some(x), Some(y)) if x != y => return Err(err(at, "conflicting ring bond symbols")),
                                (Some(x), _) | (None, Some(x)) => x,
                                (None, None) => PatternBondKind::Implicit,
                            };
                            self.bonds.push(PatternBond { a: open, b: p, kind });
                        }
                    }
                }
                b'.' => return Err(err(at, "'.' inside a single pattern")),
                b'>' => return Err(err(at, "unexpected '>'")),
                _ => {
                    let idx = if c == b'[' { self.bracket()? } else { self.organic()? };
                    if let Some(p) = prev {
                        let kind = pending.take().map_or(PatternBondKind::Implicit, |x| x.0);
                        self.bonds.push(PatternBond { a: p, b: idx, kind });
                    }
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() {
            return Err(err(self.src.len(), "dangling bond"));
        }
        if !branches.is_empty() {
            return Err(err(self.src.len(), "unclosed branch"));
        }
        if !rings.is_empty() {
            return Err(err(self.src.len(), "unclosed ring"));
        }
        Pattern::new(self.atoms, self.bonds).map_err(|e| match e {
            ReactionError::Syntax { msg, .. } => err(self.src.len(), msg),
            other => other,
        })
    }

    fn element_token(&mut self) -> Option<(Element, Option<bool>)> {
        let c = self.peek()?;
        let next = self.src.get(self.pos + 1).copied();
        let (e, arom, w) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, Some(false), 2),
            (b'B', Some(b'r')) => (Element::Br, Some(false), 2),
            (b'B', _) => (Element::B, Some(false), 1),
            (b'C', _) => (Element::C, Some(false), 1),
            (b'N', _) => (Element::N, Some(false), 1),
            (b'O', _) => (Element::O, Some(false), 1),
            (b'P', _) => (Element::P, Some(false), 1),
            (b'S', _) => (Element::S, Some(false), 1),
            (b'F', _) => (Element::F, Some(false), 1),
            (b'I', _) => (Element::I, Some(false), 1),
            (b'c', _) => (Element::C, Some(true), 1),
            (b'n', _) => (Element::N, Some(true), 1),
            (b'o', _) => (Element::O, Some(true), 1),
            (b's', _) => (Element::S, Some(true), 1),
            _ => return None,
        };
        self.pos += w;
        Some((e, arom))
    }

    fn organic(&mut self) -> Result<usize, ReactionError> {
        let at = self.pos;
        let (element, aromatic) = self
            .element_token()
            .ok_or_else(|| err(at, format!("unexpected character '{}'", char::from(self.src[at]))))?;
        self.atoms.push(PatternAtom {
            element,
            aromatic,
            charge: None,
            degree: None,
            hydrogens: None,
            map: None,
        });
        Ok(self.atoms.len() - 1)
    }

    fn bracket(&mut self) -> Result<usize, ReactionError> {
        let open = self.pos;
        self.pos += 1;
        let mut element: Option<(Element, Option<bool>)> = None;
        let mut atom = PatternAtom {
            element: Element::C,
            aromatic: None,
            charge: None,
            degree: None,
            hydrogens: None,
            map: None,
        };
        loop {
            let at = self.pos;
            match self.peek() {
                None => return Err(err(open, "unterminated bracket")),
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                Some(b';' | b'&') => self.pos += 1,
                Some(b',' | b'!' | b'$') => return Err(err(at, "logical operators and recursion are not supported")),
                Some(b'#') => {
                    self.pos += 1;
                    let z = self.number().ok_or_else(|| err(at, "'#' needs an atomic number"))?;
                    let e = u8::try_from(z)
                        .ok()
                        .and_then(Element::from_atomic_number)
                        .ok_or_else(|| err(at, format!("unsupported atomic number {z}")))?;
                    if element.replace((e, None)).is_some() {
                        return Err(err(at, "two element primitives"));
                    }
                }
                Some(b'D') => {
                    self.pos += 1;
                    let d = self.number().unwrap_or(1);
                    atom.degree = Some(u8::try_from(d).map_err(|_| err(at, "degree too large"))?);
                }
                Some(b'H') => {
                    self.pos += 1;
                    let h = self.number().unwrap_or(1);
                    atom.hydrogens = Some(u8::try_from(h).map_err(|_| err(at, "H count too large"))?);
                }
                Some(s @ (b'+' | b'-')) => {
                    self.pos += 1;
                    let unit: i32 = if s == b'+' { 1 } else { -1 };
                    let q = self.number().map_or(unit, |n| unit * n as i32);
                    atom.charge = Some(i8::try_from(q).map_err(|_| err(at, "charge out of range"))?);
                }
                Some(b':') => {
                    self.pos += 1;
                    let m = self.number().ok_or_else(|| err(at, "atom map needs a number"))?;
                    if m == 0 || m > u32::from(u16::MAX) {
                        return Err(err(at, "atom map must be a positive 16-bit integer"));
                    }
                    atom.map = Some(m as u16);
                    if self.peek() != Some(b']') {
                        return Err(err(self.pos, "atom map must close the bracket"));
                    }
                }
                Some(_) => {
                    let tok = self
                        .element_token()
                        .ok_or_else(|| err(at, format!("unknown primitive '{}'", char::from(self.src[at]))))?;
                    if element.replace(tok).is_some() {
                        return Err(err(at, "two element primitives"));
                    }
                }
            }
        }
        let (e, arom) = element.ok_or_else(|| err(open, "bracket atom without element"))?;
        atom.element = e;
        atom.aromatic = arom;
        self.atoms.push(atom);
        Ok(self.atoms.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_primitives() {
        let p = parse_pattern("[C;D3;H0:1](=[O:2])[OH1]").unwrap();
        assert_eq!(p.atom_count(), 3);
        let a = &p.atoms()[0];
        assert_eq!(
            (a.element, a.aromatic, a.degree, a.hydrogens, a.map),
            (Element::C, Some(false), Some(3), Some(0), Some(1))
        );
        assert_eq!(p.atoms()[2].hydrogens, Some(1));
        assert_eq!(p.bonds()[0].kind, PatternBondKind::Double);
        assert_eq!(p.bonds()[1].kind, PatternBondKind::Implicit);
    }

    #[test]
    fn element_classes() {
        let p = parse_pattern("[#6]c[N+]~[O-]").unwrap();
        assert_eq!(p.atoms()[0].aromatic, None);
        assert_eq!(p.atoms()[1].aromatic, Some(true));
        assert_eq!(p.atoms()[2].charge, Some(1));
        assert_eq!(p.atoms()[3].charge, Some(-1));
        assert_eq!(p.bonds()[2].kind, PatternBondKind::Any);
        let cl = parse_pattern("[Cl]").unwrap();
        assert_eq!(cl.atoms()[0].element, Element::Cl);
    }

    #[test]
    fn ring_patterns() {
        let p = parse_pattern("[C:1]1[C:2][C:3]1").unwrap();
        assert_eq!(p.bonds().len(), 3);
    }

    #[test]
    fn rejects() {
        for bad in [
            "",
            "[C",
            "[C,N]",
            "[!C]",
            "[$(CO)]",
            "C.C",
            "[C:1]C[C:1]",
            "C1C",
            "[X]",
            "[C:1H]",
            "C(",
            "C=",
        ] {
            assert!(parse_pattern(bad).is_err(), "{bad}");
        }
        assert!(matches!(parse_pattern("[C:1]C[C:1]"), Err(ReactionError::Mapping(_))));
    }
}
