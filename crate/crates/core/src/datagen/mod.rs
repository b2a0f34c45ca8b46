//! Training corpus generation: random-policy rollouts on the tree
//! environment, a root-property filter, a deduplicated split, and
//! per-network supervised examples.

mod examples;
mod features;

pub use examples::{
    decode_shard, encode_shard, extract_training_examples, read_shard, write_shard, NetworkTag, Target, TrainingExample,
};
pub use features::Featurizer;

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::molgraph::{descriptors, Molecule};
use crate::synthtree::{Action, ActionKind, Environment, Rt1, SyntheticTree, DEFAULT_T_MAX};

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("only {produced} of {wanted} trees after {rollouts} rollouts")]
    InsufficientYield {
        produced: usize,
        wanted: usize,
        rollouts: usize,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Tree(#[from] crate::synthtree::TreeError),
}

impl DatagenError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenConfig {
    pub n_target_trees: usize,
    pub t_max: usize,
    /// Relative weights of Add, Expand, Merge, End among the valid kinds.
    pub action_weights: [f64; 4],
    /// End weight grows by this factor per completed reaction beyond the first.
    pub end_ramp: f64,
    pub filter: bool,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub seed: u64,
    /// Rollout budget; 0 means 100 per requested tree.
    pub max_rollouts: usize,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            n_target_trees: 500,
            t_max: DEFAULT_T_MAX,
            action_weights: [1.0; 4],
            end_ramp: 1.0,
            filter: true,
            split: [0.6, 0.2, 0.2],
            seed: 0,
            max_rollouts: 0,
        }
    }
}

impl DatagenConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: &str| Err(DatagenError::Config(m.into()));
        if self.action_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("action weights must be finite and nonnegative");
        }
        if !self.end_ramp.is_finite() || self.end_ramp < 0.0 {
            return bad("end_ramp must be finite and nonnegative");
        }
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split fractions must lie in [0, 1] and sum to 1");
        }
        if self.t_max == 0 {
            return bad("t_max must be positive");
        }
        Ok(())
    }

    fn budget(&self) -> usize {
        if self.max_rollouts == 0 {
            self.n_target_trees.saturating_mul(100).max(1000)
        } else {
            self.max_rollouts
        }
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

/// One random-policy trajectory: uniform over every masked choice, action
/// kinds weighted. `None` on a dead end.
pub fn random_rollout(env: &Environment, cfg: &DatagenConfig, rng: &mut impl Rng) -> Option<SyntheticTree> {
    let (mut tree, mut s) = env.new_tree();
    loop {
        let valid: Vec<ActionKind> = env.valid_action_types(&tree, &s).iter().collect();
        if valid.is_empty() {
            return None;
        }
        let weight = |k: ActionKind| {
            let w = cfg.action_weights[k.index()];
            if k == ActionKind::End {
                w * (1.0 + cfg.end_ramp * s.step.saturating_sub(1) as f64)
            } else {
                w
            }
        };
        let total: f64 = valid.iter().map(|&k| weight(k)).sum();
        let kind = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            *valid
                .iter()
                .find(|&&k| {
                    u -= weight(k);
                    u < 0.0 && weight(k) > 0.0
                })
                .unwrap_or_else(|| valid.iter().rev().find(|&&k| weight(k) > 0.0).unwrap())
        } else {
            pick(rng, &valid)
        };
        let action = match kind {
            ActionKind::End => Action::end(),
            ActionKind::Merge => {
                let ts: Vec<usize> = env.merge_templates(&tree, &s).ones().collect();
                Action::merge(pick(rng, &ts), 0)
            }
            ActionKind::Add | ActionKind::Expand => {
                let rt1 = if kind == ActionKind::Add {
                    let bs: Vec<usize> = env.first_blocks().ones().collect();
                    Rt1::Block(pick(rng, &bs))
                } else {
                    Rt1::MostRecent
                };
                let ts: Vec<usize> = env.valid_templates(&tree, &s, kind, rt1).ones().collect();
                let t = pick(rng, &ts);
                let rt2 = env.world.templates[t].is_bimolecular().then(|| {
                    let c: Vec<usize> = env.rt2_mask(t).ones().collect();
                    pick(rng, &c)
                });
                match rt1 {
                    Rt1::Block(b) => Action::add(b, t, rt2, 0),
                    Rt1::MostRecent => Action::expand(t, rt2, 0),
                }
            }
        };
        let r: u64 = rng.random();
        if env
            .step_choosing(&mut tree, &mut s, action, |p| (r % p.len() as u64) as usize)
            .is_err()
        {
            return None;
        }
        if s.done {
            return Some(tree);
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Drug-likeness proxy in (0, 1]: 1 inside the preferred descriptor box,
/// decaying logistically with the distance outside it.
pub fn default_score(m: &Molecule) -> f64 {
    let d = descriptors(m);
    let ha = d.heavy_atoms as f64;
    let penalty = (10.0 - ha).max(0.0) / 2.0
        + (ha - 50.0).max(0.0) / 5.0
        + if d.rings == 0 { 2.0 } else { 0.0 }
        + (0.1 - d.hetero_fraction).max(0.0) * 20.0
        + (d.hetero_fraction - 0.5).max(0.0) * 20.0;
    2.0 * logistic(-penalty)
}

/// Accept iff `s > 0.5`, otherwise with probability `s / 0.5`.
pub fn product_filter(score: f64, rng: &mut impl Rng) -> bool {
    let u: f64 = rng.random();
    score > 0.5 || u < score / 0.5
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatagenStats {
    pub rollouts: usize,
    pub dead_ends: usize,
    pub filtered: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<SyntheticTree>,
    pub valid: Vec<SyntheticTree>,
    pub test: Vec<SyntheticTree>,
    pub stats: DatagenStats,
}

fn rollout_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const CHUNK: usize = 256;

/// Rollouts run in parallel chunks; results merge in rollout order, so the
/// output does not depend on the thread count.
pub fn generate_dataset(
    env: &Environment,
    cfg: &DatagenConfig,
    score: &(dyn Fn(&Molecule) -> f64 + Sync),
) -> Result<Dataset, DatagenError> {
    cfg.validate()?;
    if env.first_blocks().count_ones() == 0 {
        return Err(DatagenError::Config("no admitted building blocks".into()));
    }
    let budget = cfg.budget();
    let mut stats = DatagenStats::default();
    let mut seen = HashSet::new();
    let mut trees = Vec::new();
    let mut next = 0usize;
    while trees.len() < cfg.n_target_trees && next < budget {
        let end = (next + CHUNK).min(budget);
        let results: Vec<Option<(SyntheticTree, bool)>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = rollout_rng(cfg.seed, i as u64);
                let tree = random_rollout(env, cfg, &mut rng)?;
                let keep = !cfg.filter || {
                    let root = tree.molecule(tree.root().expect("complete"));
                    product_filter(score(root), &mut rng)
                };
                Some((tree, keep))
            })
            .collect();
        for r in results {
            stats.rollouts += 1;
            match r {
                None => stats.dead_ends += 1,
                Some((_, false)) => stats.filtered += 1,
                Some((tree, true)) => {
                    if !seen.insert(tree.root_smiles().unwrap().to_string()) {
                        stats.duplicates += 1;
                    } else {
                        trees.push(tree);
                        if trees.len() == cfg.n_target_trees {
                            break;
                        }
                    }
                }
            }
        }
        next = end;
    }
    if trees.len() < cfg.n_target_trees {
        return Err(DatagenError::InsufficientYield {
            produced: trees.len(),
            wanted: cfg.n_target_trees,
            rollouts: stats.rollouts,
        });
    }
    let mut order: Vec<usize> = (0..trees.len()).collect();
    order.shuffle(&mut rollout_rng(cfg.seed, u64::MAX));
    let n = trees.len();
    let n_train = (cfg.split[0] * n as f64).round() as usize;
    let n_valid = ((cfg.split[1] * n as f64).round() as usize).min(n - n_train);
    let mut slots: Vec<Option<SyntheticTree>> = trees.into_iter().map(Some).collect();
    let mut take = |ix: &[usize]| ix.iter().map(|&i| slots[i].take().unwrap()).collect::<Vec<_>>();
    let train = take(&order[..n_train]);
    let valid = take(&order[n_train..n_train + n_valid]);
    let test = take(&order[n_train + n_valid..]);
    Ok(Dataset {
        train,
        valid,
        test,
        stats,
    })
}

pub fn write_trees(path: &Path, trees: &[SyntheticTree]) -> Result<(), DatagenError> {
    let mut text = String::new();
    for t in trees {
        text.push_str(&t.to_json());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| DatagenError::io(path, e))
}

pub fn read_trees(path: &Path) -> Result<Vec<SyntheticTree>, DatagenError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatagenError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            SyntheticTree::from_json(l).map_err(|e| DatagenError::Format(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Examples for a whole set of trees, in tree order.
pub fn extract_all(
    trees: &[SyntheticTree],
    env: &Environment,
    fz: &Featurizer,
) -> Result<Vec<TrainingExample>, DatagenError> {
    let per_tree: Vec<_> = trees
        .par_iter()
        .map(|t| extract_training_examples(t, env, fz))
        .collect::<Result<_, _>>()?;
    Ok(per_tree.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests;
