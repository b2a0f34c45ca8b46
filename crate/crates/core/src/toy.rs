//! A small bundled world: five templates and fifty building blocks.

use crate::reactions::{parse_blocks, parse_templates, World};

pub const TEMPLATES: &str = include_str!("../data/toy_templates.tsv");
pub const BLOCKS: &str = include_str!("../data/toy_blocks.smi");

pub fn world() -> World {
    let templates = parse_templates(TEMPLATES, "toy_templates.tsv").expect("bundled templates parse");
    let blocks = parse_blocks(BLOCKS, "toy_blocks.smi").expect("bundled blocks parse");
    World::new(templates, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::Molecule;
    use crate::reactions::match_pattern;

    #[test]
    fn all_blocks_admitted() {
        let w = world();
        assert_eq!(w.templates.len(), 5);
        assert_eq!(w.blocks.len(), 50);
        assert_eq!(w.rejected, 0);
    }

    #[test]
    fn masks_match_exhaustively() {
        let w = world();
        for (t, tpl) in w.templates.iter().enumerate() {
            for (p, pat) in tpl.reactants().iter().enumerate() {
                for (b, mol) in w.blocks.iter().enumerate() {
                    assert_eq!(w.masks.position(t, p).get(b), !match_pattern(pat, mol).is_empty());
                }
            }
        }
    }

    /// Every mask bit yields a product with every compatible partner.
    #[test]
    fn masks_are_sound() {
        let w = world();
        for (t, tpl) in w.templates.iter().enumerate() {
            let first: Vec<usize> = w.masks.position(t, 0).ones().collect();
            assert!(!first.is_empty());
            if tpl.is_bimolecular() {
                let second: Vec<usize> = w.masks.position(t, 1).ones().collect();
                for &a in &first {
                    for &b in &second {
                        let out = tpl.apply(&[&w.blocks[a], &w.blocks[b]]).unwrap();
                        assert!(
                            !out.is_empty(),
                            "{} + {} via {}",
                            w.block_smiles[a],
                            w.block_smiles[b],
                            tpl.name
                        );
                        out.iter().for_each(|m: &Molecule| assert!(m.is_connected()));
                    }
                }
            } else {
                for &a in &first {
                    assert!(!tpl.apply(&[&w.blocks[a]]).unwrap().is_empty());
                }
            }
        }
    }
}
