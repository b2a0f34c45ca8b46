use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::molgraph::{FingerprintSpec, Molecule};
use crate::synthtree::{MdpState, SyntheticTree};

/// Fingerprint sizes shared by data extraction, training and decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Featurizer {
    /// Fingerprint fed to the networks (state slots, target, first reactant).
    pub mlp: FingerprintSpec,
    /// Fingerprint the reactant regressors predict and the k-NN index stores.
    pub knn: FingerprintSpec,
    pub n_templates: usize,
}

impl Featurizer {
    pub const TOY_MLP: FingerprintSpec = FingerprintSpec::new(1024, 2);
    pub const TOY_KNN: FingerprintSpec = FingerprintSpec::new(128, 2);
    pub const FULL_MLP: FingerprintSpec = FingerprintSpec::new(4096, 2);
    pub const FULL_KNN: FingerprintSpec = FingerprintSpec::new(256, 2);

    pub fn toy(n_templates: usize) -> Self {
        Self {
            mlp: Self::TOY_MLP,
            knn: Self::TOY_KNN,
            n_templates,
        }
    }

    pub fn mlp_fp(&self, m: &Molecule) -> BitSet {
        self.mlp.compute(m).into_bits()
    }

    pub fn knn_fp(&self, m: &Molecule) -> BitSet {
        self.knn.compute(m).into_bits()
    }

    /// Most recent root then the other root, zero-padded.
    pub fn state(&self, tree: &SyntheticTree, state: &MdpState) -> BitSet {
        let slot = |n: Option<usize>| match n {
            Some(n) => self.mlp_fp(tree.molecule(n)),
            None => BitSet::new(self.mlp.nbits),
        };
        slot(state.most_recent).concat(&slot(state.other_root()))
    }

    pub fn act_input(&self, z_state: &BitSet, z_target: &BitSet) -> BitSet {
        z_state.concat(z_target)
    }

    pub fn rxn_input(&self, z_state: &BitSet, z_target: &BitSet, z_rt1: &BitSet) -> BitSet {
        z_state.concat(z_target).concat(z_rt1)
    }

    pub fn rt2_input(&self, z_state: &BitSet, z_target: &BitSet, z_rt1: &BitSet, template: usize) -> BitSet {
        let onehot = BitSet::from_indices(self.n_templates, [template]);
        self.rxn_input(z_state, z_target, z_rt1).concat(&onehot)
    }

    pub fn act_dim(&self) -> usize {
        3 * self.mlp.nbits
    }

    pub fn rxn_dim(&self) -> usize {
        4 * self.mlp.nbits
    }

    pub fn rt2_dim(&self) -> usize {
        4 * self.mlp.nbits + self.n_templates
    }
}
