use crate::bits::BitSet;
use crate::molgraph::{parse_smiles, write_canonical_smiles, Molecule};
use crate::reactions::{has_match, World};

use super::tree::{Action, ActionKind, MdpState, Role, Rt1, SyntheticTree};
use super::TreeError;

pub const DEFAULT_T_MAX: usize = 8;

/// Subset of the four action kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActionSet([bool; 4]);

impl ActionSet {
    pub fn contains(&self, k: ActionKind) -> bool {
        self.0[k.index()]
    }

    pub fn insert(&mut self, k: ActionKind) {
        self.0[k.index()] = true;
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&x| x)
    }

    pub fn iter(&self) -> impl Iterator<Item = ActionKind> + '_ {
        ActionKind::ALL.into_iter().filter(|&k| self.contains(k))
    }

    pub fn as_mask(&self) -> [bool; 4] {
        self.0
    }
}

/// The construction environment over a fixed world.
#[derive(Debug, Clone)]
pub struct Environment<'w> {
    pub world: &'w World,
    pub t_max: usize,
    /// Blocks that can start a sub-tree (first reactant of a usable template).
    first_blocks: BitSet,
}

/// Template index and reactants: `(Some(node), _)` for tree nodes, `(None, block)` for new leaves.
type Resolved = (usize, Vec<(Option<usize>, usize)>);

impl<'w> Environment<'w> {
    pub fn new(world: &'w World, t_max: usize) -> Self {
        let n = world.blocks.len();
        let mut env = Self {
            world,
            t_max,
            first_blocks: BitSet::new(n),
        };
        for b in 0..n {
            if env.add_templates(b).any() {
                env.first_blocks.set(b, true);
            }
        }
        env
    }

    pub fn template_count(&self) -> usize {
        self.world.templates.len()
    }

    pub fn first_blocks(&self) -> &BitSet {
        &self.first_blocks
    }

    pub fn new_tree(&self) -> (SyntheticTree, MdpState) {
        (SyntheticTree::new(), MdpState::default())
    }

    /// A bi-molecular template is usable only if some block fits position 2.
    fn usable(&self, t: usize) -> bool {
        let tpl = &self.world.templates[t];
        !tpl.is_bimolecular() || self.world.masks.position(t, 1).any()
    }

    fn node_matches(&self, tree: &SyntheticTree, node: usize, t: usize, position: usize) -> bool {
        match tree.nodes[node].block {
            Some(b) => self.world.masks.position(t, position).get(b),
            None => has_match(&self.world.templates[t].reactants()[position], tree.molecule(node)),
        }
    }

    /// Templates a block can enter as first reactant.
    pub fn add_templates(&self, block: usize) -> BitSet {
        let n = self.template_count();
        BitSet::from_indices(
            n,
            (0..n).filter(|&t| self.world.masks.position(t, 0).get(block) && self.usable(t)),
        )
    }

    /// Templates applicable with the node as first reactant.
    pub fn expand_templates(&self, tree: &SyntheticTree, node: usize) -> BitSet {
        let n = self.template_count();
        BitSet::from_indices(
            n,
            (0..n).filter(|&t| self.usable(t) && self.node_matches(tree, node, t, 0)),
        )
    }

    /// Bi-molecular templates joining the two roots in either order.
    pub fn merge_templates(&self, tree: &SyntheticTree, state: &MdpState) -> BitSet {
        let n = self.template_count();
        let (Some(a), Some(b)) = (state.most_recent, state.other_root()) else {
            return BitSet::new(n);
        };
        BitSet::from_indices(n, (0..n).filter(|&t| self.merge_order(tree, a, b, t).is_some()))
    }

    fn merge_order(&self, tree: &SyntheticTree, a: usize, b: usize, t: usize) -> Option<[usize; 2]> {
        if !self.world.templates[t].is_bimolecular() {
            return None;
        }
        if self.node_matches(tree, a, t, 0) && self.node_matches(tree, b, t, 1) {
            Some([a, b])
        } else if self.node_matches(tree, b, t, 0) && self.node_matches(tree, a, t, 1) {
            Some([b, a])
        } else {
            None
        }
    }

    /// Template mask for an action kind, given the first reactant where it is a block.
    pub fn valid_templates(&self, tree: &SyntheticTree, state: &MdpState, kind: ActionKind, rt1: Rt1) -> BitSet {
        let n = self.template_count();
        match (kind, rt1) {
            (ActionKind::Add, Rt1::Block(b)) if b < self.world.blocks.len() => self.add_templates(b),
            (ActionKind::Expand, Rt1::MostRecent) => match state.most_recent {
                Some(m) => self.expand_templates(tree, m),
                None => BitSet::new(n),
            },
            (ActionKind::Merge, Rt1::MostRecent) => self.merge_templates(tree, state),
            _ => BitSet::new(n),
        }
    }

    /// Blocks allowed as second reactant of template `t`.
    pub fn rt2_mask(&self, t: usize) -> &BitSet {
        self.world.masks.position(t, 1)
    }

    pub fn valid_action_types(&self, tree: &SyntheticTree, state: &MdpState) -> ActionSet {
        let mut s = ActionSet::default();
        if state.done {
            return s;
        }
        let roots = state.roots.len();
        // Steps still needed to return to a single root after the action.
        let budget = |extra: usize| state.step + 1 + extra <= self.t_max;
        if roots < 2 && budget(roots) && self.first_blocks.any() {
            s.insert(ActionKind::Add);
        }
        if let Some(m) = state.most_recent {
            if budget(roots - 1) && self.expand_templates(tree, m).any() {
                s.insert(ActionKind::Expand);
            }
        }
        if roots == 2 && self.merge_templates(tree, state).any() {
            s.insert(ActionKind::Merge);
        }
        if roots == 1 && state.step >= 1 {
            s.insert(ActionKind::End);
        }
        s
    }

    /// Reactant molecules and node ids (`None` for new leaves) for a non-End action.
    fn resolve(&self, tree: &SyntheticTree, state: &MdpState, a: &Action) -> Result<Resolved, TreeError> {
        let bad = |m: String| Err(TreeError::InvalidAction(m));
        if !self.valid_action_types(tree, state).contains(a.kind) {
            return bad(format!("{:?} not valid in this state", a.kind));
        }
        let Some(t) = a.template else {
            return bad("missing template".into());
        };
        if t >= self.template_count() {
            return bad(format!("template {t} out of range"));
        }
        let nb = self.world.blocks.len();
        let rt1 = a.rt1.unwrap_or(Rt1::MostRecent);
        if !self.valid_templates(tree, state, a.kind, rt1).get(t) {
            return bad(format!("template {t} masked for {:?}", a.kind));
        }
        let bi = self.world.templates[t].is_bimolecular();
        // (existing node, block id) pairs; block id is meaningful only for new leaves.
        let mut reactants: Vec<(Option<usize>, usize)> = Vec::new();
        match (a.kind, rt1) {
            (ActionKind::Add, Rt1::Block(b)) => reactants.push((None, b)),
            (ActionKind::Expand, Rt1::MostRecent) => reactants.push((state.most_recent, 0)),
            (ActionKind::Merge, Rt1::MostRecent) => {
                let (a0, b0) = (state.most_recent.unwrap(), state.other_root().unwrap());
                let order = self.merge_order(tree, a0, b0, t).expect("merge mask checked");
                if a.rt2.is_some() {
                    return bad("merge takes no second block".into());
                }
                return Ok((t, vec![(Some(order[0]), 0), (Some(order[1]), 0)]));
            }
            _ => return bad(format!("first reactant {rt1:?} does not fit {:?}", a.kind)),
        }
        match (bi, a.rt2) {
            (true, Some(b2)) if b2 < nb && self.rt2_mask(t).get(b2) => reactants.push((None, b2)),
            (true, Some(b2)) => return bad(format!("block {b2} cannot be second reactant of template {t}")),
            (true, None) => return bad("bi-molecular template needs a second reactant".into()),
            (false, Some(_)) => return bad("uni-molecular template takes one reactant".into()),
            (false, None) => {}
        }
        Ok((t, reactants))
    }

    fn reactant_mol<'a>(&'a self, tree: &'a SyntheticTree, r: (Option<usize>, usize)) -> &'a Molecule {
        match r {
            (Some(node), _) => tree.molecule(node),
            (None, b) => &self.world.blocks[b],
        }
    }

    /// Distinct products of a non-End action, in deterministic order.
    pub fn outcomes(&self, tree: &SyntheticTree, state: &MdpState, a: &Action) -> Result<Vec<Molecule>, TreeError> {
        let (t, rs) = self.resolve(tree, state, a)?;
        let mols: Vec<&Molecule> = rs.iter().map(|&r| self.reactant_mol(tree, r)).collect();
        Ok(self.world.templates[t].apply(&mols)?)
    }

    /// Applies an action in place. On error the tree and state are unchanged.
    pub fn step(&self, tree: &mut SyntheticTree, state: &mut MdpState, a: Action) -> Result<(), TreeError> {
        self.step_choosing(tree, state, a, |_| a.outcome)
    }

    /// Like [`step`](Self::step) but picks the product with `choose`; the chosen
    /// index is recorded in the logged action.
    pub fn step_choosing(
        &self,
        tree: &mut SyntheticTree,
        state: &mut MdpState,
        mut a: Action,
        choose: impl FnOnce(&[Molecule]) -> usize,
    ) -> Result<(), TreeError> {
        if a.kind == ActionKind::End {
            if !self.valid_action_types(tree, state).contains(ActionKind::End) {
                return Err(TreeError::InvalidAction("End not valid in this state".into()));
            }
            if a.rt1.is_some() || a.template.is_some() || a.rt2.is_some() {
                return Err(TreeError::InvalidAction("End carries no operands".into()));
            }
            let root = state.roots[0];
            tree.nodes[root].role = Role::Root;
            tree.action_log.push(a);
            state.done = true;
            return Ok(());
        }
        let (t, rs) = self.resolve(tree, state, &a)?;
        let mols: Vec<&Molecule> = rs.iter().map(|&r| self.reactant_mol(tree, r)).collect();
        let products = self.world.templates[t].apply(&mols)?;
        let o = choose(&products);
        let Some(product) = products.into_iter().nth(o) else {
            return Err(TreeError::InvalidAction(format!("outcome {o} out of range")));
        };
        a.outcome = o;
        // Store the graph in canonical atom order so that deserialized trees compare equal.
        let smi = write_canonical_smiles(&product);
        let canon = parse_smiles(&smi).map_err(|e| TreeError::InvalidAction(format!("product {smi}: {e}")))?;
        let mut ids = Vec::with_capacity(rs.len());
        for r in rs {
            ids.push(match r {
                (Some(node), _) => node,
                (None, b) => tree.push_node(
                    self.world.block_smiles[b].clone(),
                    self.world.blocks[b].clone(),
                    Role::BuildingBlock,
                    Some(b),
                ),
            });
        }
        let p = tree.push_node(smi, canon, Role::Intermediate, None);
        tree.reactions.push(crate::synthtree::ReactionNode {
            template: t,
            reactants: ids.clone(),
            product: p,
        });
        tree.action_log.push(a);
        state.roots.retain(|r| !ids.contains(r));
        state.roots.push(p);
        state.most_recent = Some(p);
        state.step += 1;
        Ok(())
    }

    /// Functional form of [`step`](Self::step).
    pub fn apply_action(
        &self,
        tree: &SyntheticTree,
        state: &MdpState,
        a: Action,
    ) -> Result<(SyntheticTree, MdpState), TreeError> {
        let (mut t, mut s) = (tree.clone(), state.clone());
        self.step(&mut t, &mut s, a)?;
        Ok((t, s))
    }

    /// Rebuilds a tree from its action log.
    pub fn replay(&self, log: &[Action]) -> Result<(SyntheticTree, MdpState), TreeError> {
        let (mut tree, mut state) = self.new_tree();
        for (i, &a) in log.iter().enumerate() {
            self.step(&mut tree, &mut state, a)
                .map_err(|e| TreeError::ReplayDivergence {
                    step: i,
                    reason: e.to_string(),
                })?;
        }
        Ok((tree, state))
    }
}
