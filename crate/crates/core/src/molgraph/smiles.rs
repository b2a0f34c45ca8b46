//! Parser for the supported SMILES subset.
//!
//! Organic-subset atoms `B C N O P S F Cl Br I`, aromatic `c n o s`, bracket
//! atoms with H-count, charge and atom map, bonds `- = # :`, branches, and
//! ring closures (`0-9`, `%nn`). Stereo marks, isotopes, wildcards and
//! multi-fragment input are rejected as unsupported.

use std::collections::BTreeMap;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, Molecule};
use super::MolError;

pub fn parse_smiles(text: &str) -> Result<Molecule, MolError> {
    Parser::new(text).parse()
}

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    /// Atoms written without brackets get their hydrogens resolved afterwards.
    implicit: Vec<bool>,
    bonds: Vec<Bond>,
    rings: BTreeMap<u32, RingOpen>,
}

fn syntax(pos: usize, msg: impl Into<String>) -> MolError {
    MolError::Syntax { pos, msg: msg.into() }
}

fn unsupported(pos: usize, feature: &'static str) -> MolError {
    MolError::Unsupported { pos, feature }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            implicit: Vec::new(),
            bonds: Vec::new(),
            rings: BTreeMap::new(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Molecule, MolError> {
        if self.src.is_empty() {
            return Err(syntax(0, "empty input"));
        }
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondOrder, usize)> = None;
        let mut branches: Vec<usize> = Vec::new();

        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(syntax(at, "branch before any atom"));
                    }
                    if pending.is_some() {
                        return Err(syntax(at, "bond symbol before branch"));
                    }
                    branches.push(prev.unwrap());
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(syntax(at, "dangling bond before ')'"));
                    }
                    prev = Some(branches.pop().ok_or_else(|| syntax(at, "unmatched ')'"))?);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if pending.is_some() {
                        return Err(syntax(at, "two consecutive bond symbols"));
                    }
                    if prev.is_none() {
                        return Err(syntax(at, "bond before any atom"));
                    }
                    let order = match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    };
                    pending = Some((order, at));
                    self.pos += 1;
                }
                b'/' | b'\\' => return Err(unsupported(at, "directional bond (stereo)")),
                b'@' => return Err(unsupported(at, "chirality")),
                b'.' => return Err(unsupported(at, "multi-fragment input")),
                b'*' => return Err(unsupported(at, "wildcard atom")),
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(syntax(at, "ring closure before any atom"));
                    };
                    let label = self.ring_label()?;
                    let order = pending.take().map(|(o, _)| o);
                    self.ring_bond(p, label, order, at)?;
                }
                b'[' => {
                    let idx = self.bracket_atom()?;
                    self.link(prev, idx, pending.take().map(|p| p.0));
                    prev = Some(idx);
                }
                _ => {
                    let idx = self.organic_atom()?;
                    self.link(prev, idx, pending.take().map(|p| p.0));
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, at)) = pending {
            return Err(syntax(at, "dangling bond at end of input"));
        }
        if !branches.is_empty() {
            return Err(syntax(self.src.len(), "unclosed branch"));
        }
        if let Some((label, _)) = self.rings.iter().next() {
            return Err(syntax(self.src.len(), format!("unclosed ring {label}")));
        }

        let implicit = std::mem::take(&mut self.implicit);
        let mut mol = Molecule::new_unchecked_valence(self.atoms, self.bonds)?;
        for (i, &imp) in implicit.iter().enumerate() {
            if imp {
                let h = mol.implicit_hydrogens(i).ok_or(MolError::Valence {
                    atom: i,
                    element: mol.atom(i).element.symbol(),
                })?;
                mol.set_hydrogens(i, h);
            }
        }
        let atoms = mol.atoms().to_vec();
        let bonds = mol.bonds().to_vec();
        Molecule::new(atoms, bonds)
    }

    fn link(&mut self, prev: Option<usize>, idx: usize, order: Option<BondOrder>) {
        if let Some(p) = prev {
            let order = order.unwrap_or_else(|| self.default_order(p, idx));
            self.bonds.push(Bond { a: p, b: idx, order });
        }
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_label(&mut self) -> Result<u32, MolError> {
        let at = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let d1 = self.peek().filter(u8::is_ascii_digit);
            let d2 = self.src.get(self.pos + 1).copied().filter(u8::is_ascii_digit);
            match (d1, d2) {
                (Some(a), Some(b)) => {
                    self.pos += 2;
                    Ok(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
                }
                _ => Err(syntax(at, "'%' must be followed by two digits")),
            }
        } else {
            let d = self.src[self.pos] - b'0';
            self.pos += 1;
            Ok(u32::from(d))
        }
    }

    fn ring_bond(&mut self, atom: usize, label: u32, order: Option<BondOrder>, at: usize) -> Result<(), MolError> {
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(label, RingOpen { atom, order });
                Ok(())
            }
            Some(open) => {
                if open.atom == atom {
                    return Err(syntax(at, "ring closure onto the same atom"));
                }
                let order = match (open.order, order) {
                    (Some(a), Some(b)) if a != b => return Err(syntax(at, "conflicting ring-closure bond orders")),
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => self.default_order(open.atom, atom),
                };
                let dup = self
                    .bonds
                    .iter()
                    .any(|b| (b.a == open.atom && b.b == atom) || (b.a == atom && b.b == open.atom));
                if dup {
                    return Err(syntax(at, "ring closure duplicates an existing bond"));
                }
                self.bonds.push(Bond {
                    a: open.atom,
                    b: atom,
                    order,
                });
                Ok(())
            }
        }
    }

    fn push_atom(&mut self, atom: Atom, implicit: bool) -> usize {
        self.atoms.push(atom);
        self.implicit.push(implicit);
        self.atoms.len() - 1
    }

    fn organic_atom(&mut self) -> Result<usize, MolError> {
        let at = self.pos;
        let c = self.src[at];
        let next = self.src.get(at + 1).copied();
        let (element, aromatic, width) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => {
                let ch = char::from(c);
                return Err(syntax(at, format!("unexpected character '{ch}'")));
            }
        };
        self.pos += width;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(self.push_atom(atom, true))
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<usize, MolError> {
        let open = self.pos;
        self.pos += 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(unsupported(self.pos, "isotope"));
        }
        let at = self.pos;
        let (element, aromatic) = match self.peek() {
            Some(b'*') => return Err(unsupported(at, "wildcard atom")),
            Some(c) if c.is_ascii_lowercase() => {
                self.pos += 1;
                let e = match c {
                    b'c' => Element::C,
                    b'n' => Element::N,
                    b'o' => Element::O,
                    b's' => Element::S,
                    _ => return Err(syntax(at, "unknown aromatic element")),
                };
                (e, true)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .src
                    .get(at + 1)
                    .filter(|n| n.is_ascii_lowercase())
                    .and_then(|&n| Element::from_symbol(std::str::from_utf8(&[c, n]).ok()?));
                if let Some(e) = two {
                    self.pos += 2;
                    (e, false)
                } else {
                    let sym = char::from(c).to_string();
                    if sym == "H" {
                        return Err(unsupported(at, "explicit hydrogen atom"));
                    }
                    let e =
                        Element::from_symbol(&sym).ok_or_else(|| syntax(at, format!("unsupported element '{sym}'")))?;
                    self.pos += 1;
                    (e, false)
                }
            }
            _ => return Err(syntax(at, "expected element symbol")),
        };
        if self.peek() == Some(b'@') {
            return Err(unsupported(self.pos, "chirality"));
        }
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let h = self.number().unwrap_or(1);
            atom.hydrogens = u8::try_from(h).map_err(|_| syntax(self.pos, "H count too large"))?;
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit: i32 = if sign == b'+' { 1 } else { -1 };
            let mut q = unit;
            if let Some(n) = self.number() {
                q = unit * n as i32;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    q += unit;
                }
            }
            if !(-4..=4).contains(&q) {
                return Err(syntax(self.pos, "charge out of range"));
            }
            atom.charge = q as i8;
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            let m = self
                .number()
                .ok_or_else(|| syntax(self.pos, "atom map needs a number"))?;
            if m == 0 || m > u32::from(u16::MAX) {
                return Err(syntax(self.pos, "atom map must be a positive 16-bit integer"));
            }
            atom.map = Some(m as u16);
        }
        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(self.push_atom(atom, false))
            }
            _ => Err(syntax(self.pos, format!("unterminated bracket atom opened at {open}"))),
        }
    }
}
