use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::hash::Fnv64;
use crate::molgraph::{write_canonical_smiles, Molecule};

use super::matcher::has_match;
use super::template::ReactionTemplate;
use super::ReactionError;

const MASK_CACHE_VERSION: u32 = 1;

/// Which building blocks can fill which template position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityMasks {
    pub version: u32,
    pub templates_hash: u64,
    pub blocks_hash: u64,
    /// `by_position[t][p]`: blocks matching reactant pattern `p` of template `t`.
    pub by_position: Vec<Vec<BitSet>>,
    /// `by_block[b]`: templates with at least one position matched by block `b`.
    pub by_block: Vec<BitSet>,
}

pub fn templates_hash(templates: &[ReactionTemplate]) -> u64 {
    let mut h = Fnv64::new();
    for t in templates {
        h.write(t.text.as_bytes());
        h.write_u8(b'\n');
    }
    h.finish()
}

pub fn blocks_hash<S: AsRef<str>>(canonical_smiles: &[S]) -> u64 {
    let mut h = Fnv64::new();
    for s in canonical_smiles {
        h.write(s.as_ref().as_bytes());
        h.write_u8(b'\n');
    }
    h.finish()
}

impl CompatibilityMasks {
    pub fn build(templates: &[ReactionTemplate], blocks: &[Molecule]) -> Self {
        let rows: Vec<Vec<Vec<bool>>> = blocks
            .par_iter()
            .map(|b| {
                templates
                    .iter()
                    .map(|t| t.reactants().iter().map(|p| has_match(p, b)).collect())
                    .collect()
            })
            .collect();
        let n = blocks.len();
        let mut by_position: Vec<Vec<BitSet>> = templates
            .iter()
            .map(|t| vec![BitSet::new(n); t.reactants().len()])
            .collect();
        let mut by_block = vec![BitSet::new(templates.len()); n];
        for (b, row) in rows.iter().enumerate() {
            for (t, positions) in row.iter().enumerate() {
                for (p, &hit) in positions.iter().enumerate() {
                    if hit {
                        by_position[t][p].set(b, true);
                        by_block[b].set(t, true);
                    }
                }
            }
        }
        let smiles: Vec<String> = blocks.iter().map(write_canonical_smiles).collect();
        Self {
            version: MASK_CACHE_VERSION,
            templates_hash: templates_hash(templates),
            blocks_hash: blocks_hash(&smiles),
            by_position,
            by_block,
        }
    }

    pub fn position(&self, template: usize, position: usize) -> &BitSet {
        &self.by_position[template][position]
    }

    pub fn block_count(&self) -> usize {
        self.by_block.len()
    }

    /// Indices of blocks matching at least one template position.
    pub fn admitted(&self) -> Vec<usize> {
        (0..self.by_block.len()).filter(|&b| self.by_block[b].any()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), ReactionError> {
        let json = serde_json::to_string(self).map_err(|e| ReactionError::Io(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| ReactionError::Io(format!("{}: {e}", path.display())))
    }

    /// Loads a cached mask file; `None` if missing, unreadable or keyed to other inputs.
    pub fn load_if_matching(path: &Path, templates_hash: u64, blocks_hash: u64) -> Option<Self> {
        let text = std::fs::read_to_string(path).ok()?;
        let m: Self = serde_json::from_str(&text).ok()?;
        (m.version == MASK_CACHE_VERSION && m.templates_hash == templates_hash && m.blocks_hash == blocks_hash)
            .then_some(m)
    }
}

/// Templates plus the admitted building blocks and their masks.
#[derive(Debug, Clone)]
pub struct World {
    pub templates: Vec<ReactionTemplate>,
    pub blocks: Vec<Molecule>,
    pub block_smiles: Vec<String>,
    pub masks: CompatibilityMasks,
    /// Count of input blocks dropped for matching no template position.
    pub rejected: usize,
    index: std::collections::HashMap<String, usize>,
}

impl World {
    /// Admits the blocks matching some template position. Duplicate blocks
    /// (by canonical SMILES) keep their first occurrence.
    pub fn new(templates: Vec<ReactionTemplate>, blocks: Vec<Molecule>) -> Self {
        let all = CompatibilityMasks::build(&templates, &blocks);
        let admitted = all.admitted();
        let rejected = blocks.len() - admitted.len();
        let mut index = std::collections::HashMap::new();
        let mut kept = Vec::new();
        let mut smiles = Vec::new();
        for b in admitted {
            let smi = write_canonical_smiles(&blocks[b]);
            if index.contains_key(&smi) {
                continue;
            }
            let canon = crate::molgraph::parse_smiles(&smi).expect("canonical SMILES reparses");
            index.insert(smi.clone(), kept.len());
            kept.push(canon);
            smiles.push(smi);
        }
        let masks = CompatibilityMasks::build(&templates, &kept);
        Self {
            templates,
            blocks: kept,
            block_smiles: smiles,
            masks,
            rejected,
            index,
        }
    }

    pub fn block_index(&self, canonical_smiles: &str) -> Option<usize> {
        self.index.get(canonical_smiles).copied()
    }

    pub fn templates_hash(&self) -> u64 {
        self.masks.templates_hash
    }

    pub fn blocks_hash(&self) -> u64 {
        self.masks.blocks_hash
    }
}
