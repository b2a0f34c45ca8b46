use serde::{Deserialize, Serialize};

use crate::molgraph::{parse_smiles, Molecule};

use super::TreeError;

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    BuildingBlock,
    Intermediate,
    Root,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolNode {
    pub smiles: String,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionNode {
    pub template: usize,
    /// Molecule node ids in template position order.
    pub reactants: Vec<usize>,
    pub product: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Add,
    Expand,
    Merge,
    End,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [ActionKind::Add, ActionKind::Expand, ActionKind::Merge, ActionKind::End];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rt1 {
    Block(usize),
    MostRecent,
}

/// One environment step. `outcome` picks among the distinct products of
/// the template application so that replay is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rt1: Option<Rt1>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub template: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rt2: Option<usize>,
    #[serde(default)]
    pub outcome: usize,
}

impl Action {
    pub fn add(block: usize, template: usize, rt2: Option<usize>, outcome: usize) -> Self {
        Self {
            kind: ActionKind::Add,
            rt1: Some(Rt1::Block(block)),
            template: Some(template),
            rt2,
            outcome,
        }
    }

    pub fn expand(template: usize, rt2: Option<usize>, outcome: usize) -> Self {
        Self {
            kind: ActionKind::Expand,
            rt1: Some(Rt1::MostRecent),
            template: Some(template),
            rt2,
            outcome,
        }
    }

    pub fn merge(template: usize, outcome: usize) -> Self {
        Self {
            kind: ActionKind::Merge,
            rt1: Some(Rt1::MostRecent),
            template: Some(template),
            rt2: None,
            outcome,
        }
    }

    pub fn end() -> Self {
        Self {
            kind: ActionKind::End,
            rt1: None,
            template: None,
            rt2: None,
            outcome: 0,
        }
    }
}

/// Roots (node ids, at most two), the most recent root, and the step count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MdpState {
    pub roots: Vec<usize>,
    pub most_recent: Option<usize>,
    pub step: usize,
    pub done: bool,
}

impl MdpState {
    /// The root that is not the most recent one.
    pub fn other_root(&self) -> Option<usize> {
        self.roots.iter().copied().find(|&r| Some(r) != self.most_recent)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticTree {
    pub version: u32,
    pub nodes: Vec<MolNode>,
    pub reactions: Vec<ReactionNode>,
    pub action_log: Vec<Action>,
    #[serde(skip)]
    pub(crate) mols: Vec<Molecule>,
}

impl SyntheticTree {
    pub fn new() -> Self {
        Self {
            version: TREE_FORMAT_VERSION,
            ..Self::default()
        }
    }

    pub fn molecule(&self, node: usize) -> &Molecule {
        &self.mols[node]
    }

    /// Node id of the finished root, if the tree is complete.
    pub fn root(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.role == Role::Root)
    }

    pub fn root_smiles(&self) -> Option<&str> {
        self.root().map(|r| self.nodes[r].smiles.as_str())
    }

    /// Smiles of the latest product: the root if finished, else the last reaction's product.
    pub fn product_smiles(&self) -> Option<&str> {
        self.root_smiles()
            .or_else(|| self.reactions.last().map(|r| self.nodes[r.product].smiles.as_str()))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &MolNode> {
        self.nodes.iter().filter(|n| n.role == Role::BuildingBlock)
    }

    pub fn is_complete(&self) -> bool {
        self.root().is_some()
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    pub(crate) fn push_node(&mut self, smiles: String, mol: Molecule, role: Role, block: Option<usize>) -> usize {
        self.nodes.push(MolNode { smiles, role, block });
        self.mols.push(mol);
        self.nodes.len() - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let mut t: Self = serde_json::from_str(text).map_err(|e| TreeError::Format(e.to_string()))?;
        if t.version != TREE_FORMAT_VERSION {
            return Err(TreeError::Format(format!(
                "tree version {} (expected {TREE_FORMAT_VERSION})",
                t.version
            )));
        }
        t.mols = t
            .nodes
            .iter()
            .map(|n| parse_smiles(&n.smiles).map_err(|e| TreeError::Format(format!("{}: {e}", n.smiles))))
            .collect::<Result<_, _>>()?;
        for r in &t.reactions {
            if r.product >= t.nodes.len() || r.reactants.iter().any(|&x| x >= t.nodes.len()) {
                return Err(TreeError::Format("reaction refers to a missing node".into()));
            }
        }
        Ok(t)
    }
}
