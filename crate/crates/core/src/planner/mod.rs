//! Conditional decoding: roll the policy forward from an empty tree toward
//! a target fingerprint, with masking at every head and k-NN retrieval of
//! reactants; plan over the top first-reactant candidates; evaluate recovery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::datagen::{DatagenConfig, Featurizer, NetworkTag};
use crate::molgraph::{tanimoto_bits, write_canonical_smiles, Molecule};
use crate::neural::{argmax, masked_softmax, KnnIndex, NeuralError, Policy};
use crate::reactions::World;
use crate::synthtree::{Action, ActionKind, Environment, Rt1, SyntheticTree, TreeError, DEFAULT_T_MAX};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("environment rejected a decoded action: {0}")]
    Rejected(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// First-reactant candidates explored by `plan`.
    pub k_rt1: usize,
    pub t_max: usize,
    /// `None` decodes greedily; otherwise act/rxn are sampled from the
    /// tempered masked softmax and reactants from the top of the k-NN list.
    pub temperature: Option<f64>,
    pub seed: u64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            k_rt1: 3,
            t_max: DEFAULT_T_MAX,
            temperature: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Complete(SyntheticTree),
    /// Every action was masked before the tree could finish.
    DeadEnd(SyntheticTree),
}

impl Decoded {
    pub fn tree(&self) -> &SyntheticTree {
        match self {
            Decoded::Complete(t) | Decoded::DeadEnd(t) => t,
        }
    }

    pub fn complete(self) -> Option<SyntheticTree> {
        match self {
            Decoded::Complete(t) => Some(t),
            Decoded::DeadEnd(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub best: Option<SyntheticTree>,
    pub product: Option<String>,
    pub similarity: f64,
    pub recovered: bool,
    pub candidates: Vec<SyntheticTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub target: String,
    pub recovered: bool,
    pub similarity: f64,
    pub product: Option<String>,
    pub tree: Option<SyntheticTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n: usize,
    pub recovery_rate: f64,
    pub average_similarity: f64,
    /// Mean similarity over targets that were not recovered.
    pub unrecovered_similarity: Option<f64>,
    pub records: Vec<TargetRecord>,
}

impl RecoveryReport {
    pub fn from_records(records: Vec<TargetRecord>) -> Self {
        let n = records.len();
        let hits = records.iter().filter(|r| r.recovered).count();
        let mean = |it: &mut dyn Iterator<Item = f64>| {
            let (s, c) = it.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
            (c > 0).then(|| s / c as f64)
        };
        Self {
            n,
            recovery_rate: if n > 0 { hits as f64 / n as f64 } else { 0.0 },
            average_similarity: mean(&mut records.iter().map(|r| r.similarity)).unwrap_or(0.0),
            unrecovered_similarity: mean(&mut records.iter().filter(|r| !r.recovered).map(|r| r.similarity)),
            records,
        }
    }
}

/// Sampling with `temperature`, or argmax.
fn choose<T: Scalar>(logits: &[T], mask: &[bool], temperature: Option<f64>, rng: &mut impl Rng) -> Option<usize> {
    let tempered: Vec<T> = match temperature {
        Some(t) if t > 0.0 => logits.iter().map(|&v| v / T::of(t)).collect(),
        _ => logits.to_vec(),
    };
    let p = masked_softmax(ndarray::ArrayView1::from(&tempered[..]), mask)?;
    if temperature.is_none_or(|t| t <= 0.0) {
        // Argmax over allowed entries; masked entries have probability 0.
        let masked: Vec<T> = logits
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { v } else { T::neg_infinity() })
            .collect();
        return Some(argmax(ndarray::ArrayView1::from(&masked[..])));
    }
    let mut u = T::of(rng.random::<f64>());
    for (i, &pi) in p.iter().enumerate() {
        if mask[i] && pi > T::zero() {
            if u < pi {
                return Some(i);
            }
            u = u - pi;
        }
    }
    mask.iter().rposition(|&m| m)
}

/// Decodes trees with a trained policy over a world.
pub struct Planner<'w, T> {
    pub env: Environment<'w>,
    pub policy: &'w Policy<T>,
    pub index: KnnIndex<T>,
    pub cfg: DecodeConfig,
    fz: Featurizer,
}

impl<'w, T: Scalar> Planner<'w, T> {
    pub fn new(world: &'w World, policy: &'w Policy<T>, cfg: DecodeConfig) -> Result<Self, NeuralError> {
        policy.check_compatible(world.templates_hash(), world.blocks_hash(), world.templates.len())?;
        let fz = policy.dims.featurizer;
        let fps: Vec<BitSet> = world.blocks.iter().map(|b| fz.knn_fp(b)).collect();
        Ok(Self {
            env: Environment::new(world, cfg.t_max),
            policy,
            index: KnnIndex::from_bits(&fps)?,
            cfg,
            fz,
        })
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.fz
    }

    fn retrieve(
        &self,
        query: &[T],
        mask: &BitSet,
        rank: usize,
        rng: &mut impl Rng,
    ) -> Result<Option<usize>, NeuralError> {
        let k = match self.cfg.temperature {
            Some(t) if t > 0.0 => rank.max(3),
            _ => rank + 1,
        };
        let hits = match self.index.query(query, k, Some(mask)) {
            Ok(h) => h,
            Err(NeuralError::EmptyCandidateSet) => return Ok(None),
            Err(e) => return Err(e),
        };
        let pick = match self.cfg.temperature {
            Some(t) if t > 0.0 && rank == 0 => rng.random_range(0..hits.len()),
            _ => rank,
        };
        Ok(hits.get(pick).map(|h| h.0))
    }

    /// One rollout conditioned on `z_target`. `first_rank` selects which
    /// k-NN neighbour fills the first reactant of the first step.
    pub fn decode(&self, z_target: &BitSet, first_rank: usize, rng: &mut impl Rng) -> Result<Decoded, PlanError> {
        let fz = &self.fz;
        let (mut tree, mut s) = self.env.new_tree();
        loop {
            let valid = self.env.valid_action_types(&tree, &s);
            let z_state = fz.state(&tree, &s);
            let act_in = fz.act_input(&z_state, z_target);
            let logits = self.policy.predict_one(NetworkTag::Act, &act_in)?;
            let Some(k) = choose(&logits, &valid.as_mask(), self.cfg.temperature, rng) else {
                return Ok(Decoded::DeadEnd(tree));
            };
            let kind = ActionKind::from_index(k).expect("four action kinds");
            if kind == ActionKind::End {
                self.env.step(&mut tree, &mut s, Action::end())?;
                return Ok(Decoded::Complete(tree));
            }
            let (rt1, rt1_fp) = if kind == ActionKind::Add {
                let q = self.policy.predict_one(NetworkTag::Rt1, &act_in)?;
                let rank = if s.step == 0 { first_rank } else { 0 };
                let Some(b) = self.retrieve(&q, self.env.first_blocks(), rank, rng)? else {
                    return Ok(Decoded::DeadEnd(tree));
                };
                (Rt1::Block(b), fz.mlp_fp(&self.env.world.blocks[b]))
            } else {
                let m = s.most_recent.expect("Expand and Merge need a root");
                (Rt1::MostRecent, fz.mlp_fp(tree.molecule(m)))
            };
            let tmask = self.env.valid_templates(&tree, &s, kind, rt1);
            let rxn_in = fz.rxn_input(&z_state, z_target, &rt1_fp);
            let logits = self.policy.predict_one(NetworkTag::Rxn, &rxn_in)?;
            let mask: Vec<bool> = (0..tmask.len()).map(|i| tmask.get(i)).collect();
            let Some(t) = choose(&logits, &mask, self.cfg.temperature, rng) else {
                return Ok(Decoded::DeadEnd(tree));
            };
            let rt2 = if kind != ActionKind::Merge && self.env.world.templates[t].is_bimolecular() {
                let q = self
                    .policy
                    .predict_one(NetworkTag::Rt2, &fz.rt2_input(&z_state, z_target, &rt1_fp, t))?;
                match self.retrieve(&q, self.env.rt2_mask(t), 0, rng)? {
                    Some(b) => Some(b),
                    None => return Ok(Decoded::DeadEnd(tree)),
                }
            } else {
                None
            };
            let action = match (kind, rt1) {
                (ActionKind::Add, Rt1::Block(b)) => Action::add(b, t, rt2, 0),
                (ActionKind::Expand, _) => Action::expand(t, rt2, 0),
                _ => Action::merge(t, 0),
            };
            self.env.step_choosing(&mut tree, &mut s, action, |products| {
                most_similar(products.iter().map(|p| fz.mlp_fp(p)), z_target)
            })?;
        }
    }

    fn rng_for(&self, salt: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        r.set_stream(salt);
        r
    }

    fn branches(&self, z: &BitSet, rng: &mut impl Rng) -> Result<Vec<SyntheticTree>, PlanError> {
        let mut candidates = Vec::new();
        for rank in 0..self.cfg.k_rt1.max(1) {
            if let Decoded::Complete(t) = self.decode(z, rank, rng)? {
                candidates.push(t);
            }
        }
        Ok(candidates)
    }

    /// Decodes once per first-reactant candidate and keeps the product most
    /// similar to the target.
    pub fn plan(&self, target: &Molecule) -> Result<PlanResult, PlanError> {
        let z = self.fz.mlp_fp(target);
        let candidates = self.branches(&z, &mut self.rng_for(0))?;
        Ok(rank_candidates(
            candidates,
            &z,
            &write_canonical_smiles(target),
            &self.fz,
        ))
    }

    /// Like [`plan`](Self::plan) for a bare fingerprint: the complete tree
    /// whose product is most similar to `z`, if any branch completes.
    pub fn plan_fingerprint(&self, z: &BitSet, rng: &mut impl Rng) -> Result<Option<SyntheticTree>, PlanError> {
        let candidates = self.branches(z, rng)?;
        let best = most_similar(
            candidates
                .iter()
                .map(|t| self.fz.mlp_fp(t.molecule(t.root().expect("complete")))),
            z,
        );
        Ok(candidates.into_iter().nth(best))
    }

    pub fn evaluate_recovery(&self, targets: &[Molecule]) -> Result<RecoveryReport, PlanError> {
        let records: Vec<TargetRecord> = targets
            .par_iter()
            .map(|m| {
                let r = self.plan(m)?;
                Ok(TargetRecord {
                    target: write_canonical_smiles(m),
                    recovered: r.recovered,
                    similarity: r.similarity,
                    product: r.product,
                    tree: r.best,
                })
            })
            .collect::<Result<_, PlanError>>()?;
        Ok(RecoveryReport::from_records(records))
    }
}

fn most_similar(fps: impl Iterator<Item = BitSet>, z: &BitSet) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, fp) in fps.enumerate() {
        let s = tanimoto_bits(&fp, z);
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

fn rank_candidates(candidates: Vec<SyntheticTree>, z: &BitSet, target_smiles: &str, fz: &Featurizer) -> PlanResult {
    let sims: Vec<f64> = candidates
        .iter()
        .map(|t| tanimoto_bits(&fz.mlp_fp(t.molecule(t.root().expect("complete"))), z))
        .collect();
    // A candidate that reproduces the target wins outright; otherwise the most similar.
    let exact = candidates.iter().position(|t| t.root_smiles() == Some(target_smiles));
    let best = exact.or_else(|| {
        (0..candidates.len()).fold(None, |b: Option<usize>, i| match b {
            Some(j) if sims[j] >= sims[i] => Some(j),
            _ => Some(i),
        })
    });
    PlanResult {
        best: best.map(|i| candidates[i].clone()),
        product: best.and_then(|i| candidates[i].root_smiles().map(String::from)),
        similarity: best.map_or(0.0, |i| sims[i]),
        recovered: exact.is_some(),
        candidates,
    }
}

/// Baseline that ignores the target: `k` random-policy trees, best kept.
pub fn plan_random(env: &Environment, fz: &Featurizer, target: &Molecule, k: usize, seed: u64) -> PlanResult {
    let z = fz.mlp_fp(target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = DatagenConfig {
        t_max: env.t_max,
        ..DatagenConfig::default()
    };
    let mut candidates = Vec::new();
    let mut attempts = 0;
    while candidates.len() < k && attempts < 20 * k.max(1) {
        attempts += 1;
        if let Some(t) = crate::datagen::random_rollout(env, &cfg, &mut rng) {
            candidates.push(t);
        }
    }
    rank_candidates(candidates, &z, &write_canonical_smiles(target), fz)
}

pub fn evaluate_random(
    env: &Environment,
    fz: &Featurizer,
    targets: &[Molecule],
    k: usize,
    seed: u64,
) -> RecoveryReport {
    let records = targets
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let r = plan_random(env, fz, m, k, seed.wrapping_add(i as u64));
            TargetRecord {
                target: write_canonical_smiles(m),
                recovered: r.recovered,
                similarity: r.similarity,
                product: r.product,
                tree: r.best,
            }
        })
        .collect();
    RecoveryReport::from_records(records)
}

#[cfg(test)]
mod tests;
