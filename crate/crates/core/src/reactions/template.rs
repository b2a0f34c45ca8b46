use std::collections::{HashMap, HashSet, VecDeque};

use crate::molgraph::{write_canonical_smiles, Atom, Bond, BondOrder, Molecule};

use super::matcher::{match_pattern, Embedding};
use super::pattern::{parse_pattern, Pattern};
use super::ReactionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Uni,
    Bi,
}

/// A graph-rewrite rule: one or two reactant patterns and one mapped product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionTemplate {
    pub id: usize,
    pub name: String,
    pub text: String,
    /// Informational metadata (e.g. `skeleton`, `ring-formation`).
    pub tags: Vec<String>,
    reactants: Vec<Pattern>,
    product: Pattern,
}

impl ReactionTemplate {
    pub fn reactants(&self) -> &[Pattern] {
        &self.reactants
    }

    pub fn product(&self) -> &Pattern {
        &self.product
    }

    pub fn arity(&self) -> Arity {
        if self.reactants.len() == 1 {
            Arity::Uni
        } else {
            Arity::Bi
        }
    }

    pub fn is_bimolecular(&self) -> bool {
        self.reactants.len() == 2
    }

    /// Applies the rewrite to every combination of reactant embeddings.
    ///
    /// Matched unmapped reactant atoms are deleted; the product pattern is
    /// instantiated; reactant atoms outside the match that stay reachable
    /// from a mapped atom are carried over with their bonds. Hydrogens of
    /// mapped atoms absorb the change in bond valence unless the product
    /// pattern fixes them. Invalid or fragmented products are dropped, the
    /// rest deduplicated by canonical SMILES in enumeration order.
    pub fn apply(&self, reactants: &[&Molecule]) -> Result<Vec<Molecule>, ReactionError> {
        if reactants.len() != self.reactants.len() {
            return Err(ReactionError::ReactantCount {
                expected: self.reactants.len(),
                got: reactants.len(),
            });
        }
        let mut per_position: Vec<Vec<Embedding>> = Vec::with_capacity(reactants.len());
        for (k, (p, m)) in self.reactants.iter().zip(reactants).enumerate() {
            let e = match_pattern(p, m);
            if e.is_empty() {
                return Err(ReactionError::NoMatch { position: k });
            }
            per_position.push(e);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut emit = |embs: &[&Embedding]| {
            if let Some(prod) = self.rewrite(reactants, embs) {
                let smi = write_canonical_smiles(&prod);
                if seen.insert(smi) {
                    out.push(prod);
                }
            }
        };
        match per_position.as_slice() {
            [a] => a.iter().for_each(|e| emit(&[e])),
            [a, b] => {
                for ea in a {
                    for eb in b {
                        emit(&[ea, eb]);
                    }
                }
            }
            _ => unreachable!("arity validated at parse"),
        }
        Ok(out)
    }

    fn rewrite(&self, reactants: &[&Molecule], embs: &[&Embedding]) -> Option<Molecule> {
        // (reactant, atom) -> index in the product under construction.
        let mut placed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut matched: HashSet<(usize, usize)> = HashSet::new();
        let mut mapped_source: HashMap<u16, (usize, usize)> = HashMap::new();
        for (k, (pat, emb)) in self.reactants.iter().zip(embs).enumerate() {
            for (pi, &mi) in emb.iter().enumerate() {
                matched.insert((k, mi));
                if let Some(m) = pat.atoms()[pi].map {
                    mapped_source.insert(m, (k, mi));
                }
            }
        }

        let mut atoms: Vec<Atom> = Vec::new();
        let mut fixed_h: Vec<bool> = Vec::new();
        let mut source: Vec<Option<(usize, usize)>> = Vec::new();
        for pa in self.product.atoms() {
            let src = pa.map.and_then(|m| mapped_source.get(&m).copied());
            let mut atom = match src {
                Some((k, mi)) => {
                    let mut a = reactants[k].atom(mi).clone();
                    a.element = pa.element;
                    if let Some(ar) = pa.aromatic {
                        a.aromatic = ar;
                    }
                    if let Some(q) = pa.charge {
                        a.charge = q;
                    }
                    a
                }
                None => {
                    let mut a = Atom::new(pa.element);
                    a.aromatic = pa.aromatic.unwrap_or(false);
                    a.charge = pa.charge.unwrap_or(0);
                    a
                }
            };
            atom.map = None;
            if let Some(h) = pa.hydrogens {
                atom.hydrogens = h;
            }
            if let Some(s) = src {
                placed.insert(s, atoms.len());
            }
            fixed_h.push(pa.hydrogens.is_some());
            source.push(src);
            atoms.push(atom);
        }
        let n_template_atoms = atoms.len();

        // Carry unmatched atoms reachable from mapped atoms.
        let mut queue: VecDeque<(usize, usize)> = mapped_source.values().copied().collect::<Vec<_>>().into();
        let mut sorted: Vec<_> = queue.drain(..).collect();
        sorted.sort_unstable();
        queue.extend(sorted);
        while let Some((k, a)) = queue.pop_front() {
            for &(nb, _) in reactants[k].neighbors(a) {
                if matched.contains(&(k, nb)) || placed.contains_key(&(k, nb)) {
                    continue;
                }
                let mut atom = reactants[k].atom(nb).clone();
                atom.map = None;
                placed.insert((k, nb), atoms.len());
                fixed_h.push(true);
                source.push(Some((k, nb)));
                atoms.push(atom);
                queue.push_back((k, nb));
            }
        }

        let mut bonds: Vec<Bond> = Vec::new();
        let mut has_bond: HashSet<(usize, usize)> = HashSet::new();
        let mut add = |a: usize, b: usize, order: BondOrder, bonds: &mut Vec<Bond>| {
            if has_bond.insert((a.min(b), a.max(b))) {
                bonds.push(Bond { a, b, order });
            }
        };
        for pb in self.product.bonds() {
            let order = pb.kind.explicit_order().unwrap_or_else(|| {
                let from_reactant = match (source[pb.a], source[pb.b]) {
                    (Some((ka, a)), Some((kb, b))) if ka == kb => reactants[ka].bond_between(a, b).map(|x| x.order),
                    _ => None,
                };
                from_reactant.unwrap_or(if atoms[pb.a].aromatic && atoms[pb.b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                })
            });
            add(pb.a, pb.b, order, &mut bonds);
        }
        // Reactant bonds outside the reactant pattern survive between placed atoms.
        for (k, (pat, emb)) in self.reactants.iter().zip(embs).enumerate() {
            let in_pattern: HashSet<(usize, usize)> = pat
                .bonds()
                .iter()
                .map(|b| (emb[b.a].min(emb[b.b]), emb[b.a].max(emb[b.b])))
                .collect();
            for b in reactants[k].bonds() {
                if in_pattern.contains(&(b.a.min(b.b), b.a.max(b.b))) {
                    continue;
                }
                if let (Some(&x), Some(&y)) = (placed.get(&(k, b.a)), placed.get(&(k, b.b))) {
                    add(x, y, b.order, &mut bonds);
                }
            }
        }

        let mut mol = Molecule::new_unchecked_valence(atoms, bonds).ok()?;
        for i in 0..n_template_atoms {
            if fixed_h[i] {
                continue;
            }
            let h = match source[i] {
                Some((k, mi)) => {
                    let before = reactants[k].valence_sum(mi).0;
                    let after = mol.valence_sum(i).0;
                    let h = i32::from(reactants[k].atom(mi).hydrogens) - (after - before);
                    u8::try_from(h).ok()?
                }
                None => mol.implicit_hydrogens(i)?,
            };
            mol.set_hydrogens(i, h);
        }
        Molecule::new(mol.atoms().to_vec(), mol.bonds().to_vec()).ok()
    }
}

/// Parses `reactant[.reactant] >> product`.
pub fn parse_template(text: &str) -> Result<ReactionTemplate, ReactionError> {
    parse_template_named(0, "", text)
}

pub fn parse_template_named(id: usize, name: &str, text: &str) -> Result<ReactionTemplate, ReactionError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let parts: Vec<&str> = compact.split(">>").collect();
    if parts.len() != 2 {
        return Err(ReactionError::Syntax {
            pos: 0,
            msg: "expected exactly one '>>'".into(),
        });
    }
    let (lhs, rhs) = (parts[0], parts[1]);
    let reactant_texts: Vec<&str> = lhs.split('.').collect();
    let product_texts: Vec<&str> = rhs.split('.').collect();
    if reactant_texts.len() > 2 || product_texts.len() != 1 {
        return Err(ReactionError::Arity {
            reactants: reactant_texts.len(),
            products: product_texts.len(),
        });
    }
    if reactant_texts.iter().any(|t| t.is_empty()) || rhs.is_empty() {
        return Err(ReactionError::Syntax {
            pos: 0,
            msg: "empty reactant or product".into(),
        });
    }
    let reactants = reactant_texts
        .iter()
        .map(|t| parse_pattern(t))
        .collect::<Result<Vec<_>, _>>()?;
    let product = parse_pattern(rhs)?;

    let mut owner: HashMap<u16, usize> = HashMap::new();
    for (k, r) in reactants.iter().enumerate() {
        for m in r.maps() {
            if owner.insert(m, k).is_some() {
                return Err(ReactionError::Mapping(format!("map {m} appears in both reactants")));
            }
        }
    }
    let product_maps: HashSet<u16> = product.maps().collect();
    for m in &product_maps {
        if !owner.contains_key(m) {
            return Err(ReactionError::Mapping(format!("product map {m} absent from reactants")));
        }
    }
    for m in owner.keys() {
        if !product_maps.contains(m) {
            return Err(ReactionError::Mapping(format!("reactant map {m} absent from product")));
        }
    }
    if product_maps.is_empty() {
        return Err(ReactionError::Mapping("template maps no atoms".into()));
    }
    Ok(ReactionTemplate {
        id,
        name: name.to_string(),
        text: text.trim().to_string(),
        tags: Vec::new(),
        reactants,
        product,
    })
}
