//! Genetic search over target fingerprints. Individuals are bit vectors of
//! the planner's target length; fitness is the oracle score of the molecule
//! the planner decodes from them, so every reported molecule comes with a
//! synthetic tree built from purchasable blocks.

mod oracle;

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::molgraph::Molecule;
use crate::planner::{PlanError, Planner};
use crate::synthtree::SyntheticTree;
use crate::Scalar;

pub use oracle::{Oracle, OracleError, OracleSpec};

/// Fingerprint length the inheritance distribution is stated for; other
/// lengths scale mean and deviation proportionally.
pub const REFERENCE_LENGTH: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub offspring: usize,
    pub inherit_mean: f64,
    pub inherit_std: f64,
    pub mutation_flips: usize,
    pub mutation_prob: f64,
    pub max_generations: usize,
    pub window: usize,
    pub min_improvement: f64,
    /// Bit density of random initial individuals when no seeds are given.
    pub random_density: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 128,
            offspring: 512,
            inherit_mean: 2048.0,
            inherit_std: 410.0,
            mutation_flips: 24,
            mutation_prob: 0.5,
            max_generations: 200,
            window: 10,
            min_improvement: 0.01,
            random_density: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaError {
    #[error("invalid GA config: {0}")]
    Config(String),
    #[error("seed fingerprint has length {got}, expected {expected}")]
    SeedLength { expected: usize, got: usize },
}

impl GaConfig {
    pub fn validate(&self, len: usize) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::Config(m));
        if self.population == 0 {
            return bad("population must be positive".into());
        }
        if self.offspring < self.population {
            return bad(format!("offspring {} < population {}", self.offspring, self.population));
        }
        if self.mutation_flips >= len {
            return bad(format!(
                "mutation flips {} >= fingerprint length {len}",
                self.mutation_flips
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) || !(0.0..=1.0).contains(&self.random_density) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.inherit_std.is_nan() || self.inherit_std < 0.0 || !self.inherit_mean.is_finite() {
            return bad("inheritance distribution must be finite with std >= 0".into());
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        Ok(())
    }

    /// Number of bits a child takes from its first parent.
    pub fn inheritance_count(&self, len: usize, rng: &mut impl Rng) -> usize {
        let scale = len as f64 / REFERENCE_LENGTH as f64;
        let n = Normal::new(self.inherit_mean * scale, self.inherit_std * scale)
            .expect("validated")
            .sample(rng);
        n.round().clamp(0.0, len as f64) as usize
    }
}

/// `n` uniformly chosen positions from `a`, the rest from `b`.
pub fn crossover_with(a: &BitSet, b: &BitSet, n: usize, rng: &mut impl Rng) -> BitSet {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    let mut child = b.clone();
    for i in sample(rng, a.len(), n.min(a.len())) {
        child.set(i, a.get(i));
    }
    child
}

pub fn crossover(a: &BitSet, b: &BitSet, cfg: &GaConfig, rng: &mut impl Rng) -> BitSet {
    let n = cfg.inheritance_count(a.len(), rng);
    crossover_with(a, b, n, rng)
}

/// Flips `flips` distinct uniform positions.
pub fn flip_random(x: &mut BitSet, flips: usize, rng: &mut impl Rng) {
    for i in sample(rng, x.len(), flips.min(x.len())) {
        x.flip(i);
    }
}

/// With probability `mutation_prob`, flips `mutation_flips` bits.
pub fn mutate(x: &BitSet, cfg: &GaConfig, rng: &mut impl Rng) -> BitSet {
    let mut y = x.clone();
    if rng.random_bool(cfg.mutation_prob) {
        flip_random(&mut y, cfg.mutation_flips, rng);
    }
    y
}

/// Initial pool. Seeds beyond the population size are dropped; a short
/// seed list is padded with always-mutated copies cycling over the seeds.
/// Without seeds, individuals are random with `random_density` bits set.
pub fn ga_init(seeds: &[BitSet], len: usize, cfg: &GaConfig, rng: &mut impl Rng) -> Result<Vec<BitSet>, GaError> {
    cfg.validate(len)?;
    if let Some(s) = seeds.iter().find(|s| s.len() != len) {
        return Err(GaError::SeedLength {
            expected: len,
            got: s.len(),
        });
    }
    let mut pool: Vec<BitSet> = seeds.iter().take(cfg.population).cloned().collect();
    if seeds.is_empty() {
        while pool.len() < cfg.population {
            pool.push(BitSet::from_indices(
                len,
                (0..len).filter(|_| rng.random_bool(cfg.random_density)),
            ));
        }
    }
    let mut i = 0;
    while pool.len() < cfg.population {
        let mut x = seeds[i % seeds.len()].clone();
        flip_random(&mut x, cfg.mutation_flips, rng);
        pool.push(x);
        i += 1;
    }
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub fingerprint: BitSet,
    /// `-inf` for dead-end decodes and oracle failures.
    pub fitness: f64,
    pub smiles: Option<String>,
    pub tree: Option<SyntheticTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    /// Mean over members with finite fitness; `None` if there are none.
    pub mean: Option<f64>,
    pub failed: usize,
}

impl GenerationStats {
    fn of(generation: usize, pool: &[Individual]) -> Self {
        let finite: Vec<f64> = pool.iter().map(|i| i.fitness).filter(|f| f.is_finite()).collect();
        Self {
            generation,
            best: pool.iter().map(|i| i.fitness).fold(f64::NEG_INFINITY, f64::max),
            mean: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
            failed: pool.len() - finite.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxGenerations,
    Converged,
}

/// A distinct molecule from the final pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub smiles: String,
    pub fitness: f64,
    pub tree: SyntheticTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub initial: GenerationStats,
    /// One entry per bred generation.
    pub history: Vec<GenerationStats>,
    pub stop: StopReason,
    pub population: Vec<Individual>,
    pub ranked: Vec<Ranked>,
}

impl GaResult {
    pub fn generations(&self) -> usize {
        self.history.len()
    }

    pub fn write_history(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::json!({
            "initial": self.initial,
            "history": self.history,
            "stop": self.stop,
        });
        std::fs::write(path, serde_json::to_vec_pretty(&json).map_err(std::io::Error::other)?)
    }

    /// JSON lines `{smiles, fitness, tree}`, best first.
    pub fn write_ranked(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.ranked {
            serde_json::to_writer(&mut f, r).map_err(std::io::Error::other)?;
            f.write_all(b"\n")?;
        }
        f.flush()
    }
}

/// Stop rule on the sequence of means (initial pool first): the mean has
/// improved by less than `min_improvement` over the last `window` generations.
pub fn converged(means: &[Option<f64>], window: usize, min_improvement: f64) -> bool {
    let g = means.len().saturating_sub(1);
    if g < window {
        return false;
    }
    match (means[g], means[g - window]) {
        (Some(now), Some(then)) => now - then < min_improvement,
        _ => false,
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Plans from each fingerprint over the first-reactant branches and scores
/// the resulting trees.
pub fn evaluate<T: Scalar>(
    planner: &Planner<'_, T>,
    oracle: &Oracle,
    fps: Vec<BitSet>,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<Individual>, PlanError> {
    let trees: Vec<Option<SyntheticTree>> = fps
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = rng_for(seed, stream_base + i as u64);
            planner.plan_fingerprint(z, &mut rng)
        })
        .collect::<Result<_, PlanError>>()?;
    let decoded: Vec<(usize, Molecule)> = trees
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.as_ref().map(|t| (i, t.molecule(t.root().expect("complete")).clone())))
        .collect();
    let mols: Vec<Molecule> = decoded.iter().map(|(_, m)| m.clone()).collect();
    let mut fitness = vec![f64::NEG_INFINITY; fps.len()];
    for ((i, _), score) in decoded.iter().zip(oracle.score(&mols)) {
        match score {
            Ok(v) => fitness[*i] = v,
            Err(e) => log::warn!("oracle failure for individual {i}: {e}"),
        }
    }
    Ok(fps
        .into_iter()
        .zip(trees)
        .zip(fitness)
        .map(|((fingerprint, tree), fitness)| Individual {
            fingerprint,
            fitness,
            smiles: tree.as_ref().and_then(|t| t.root_smiles().map(String::from)),
            tree,
        })
        .collect())
}

/// Top `n` by fitness; ties keep the earlier individual.
fn select(mut pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    pool.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    pool.truncate(n);
    pool
}

/// Runs the search from an initial pool (see [`ga_init`]).
pub fn ga_run<T: Scalar>(
    planner: &Planner<'_, T>,
    oracle: &Oracle,
    initial: Vec<BitSet>,
    cfg: &GaConfig,
) -> Result<GaResult, PlanError> {
    let offspring = cfg.offspring as u64;
    let mut pool = select(evaluate(planner, oracle, initial, cfg.seed, 0)?, cfg.population);
    let first = GenerationStats::of(0, &pool);
    let mut means = vec![first.mean];
    let mut history = Vec::new();
    let mut rng = rng_for(cfg.seed, u64::MAX);
    let stop = loop {
        let g = history.len() + 1;
        if g > cfg.max_generations {
            break StopReason::MaxGenerations;
        }
        let children: Vec<BitSet> = (0..cfg.offspring)
            .map(|_| {
                let a = &pool[rng.random_range(0..pool.len())].fingerprint;
                let b = &pool[rng.random_range(0..pool.len())].fingerprint;
                let child = crossover(a, b, cfg, &mut rng);
                mutate(&child, cfg, &mut rng)
            })
            .collect();
        let mut union = pool;
        union.extend(evaluate(planner, oracle, children, cfg.seed, g as u64 * offspring)?);
        pool = select(union, cfg.population);
        let stats = GenerationStats::of(g, &pool);
        log::info!("generation {g}: best {:.4} mean {:?}", stats.best, stats.mean);
        means.push(stats.mean);
        history.push(stats);
        if converged(&means, cfg.window, cfg.min_improvement) {
            break StopReason::Converged;
        }
    };
    let mut seen = HashSet::new();
    let ranked = pool
        .iter()
        .filter(|i| i.fitness.is_finite())
        .filter_map(|i| {
            let smiles = i.smiles.clone()?;
            seen.insert(smiles.clone()).then(|| Ranked {
                smiles,
                fitness: i.fitness,
                tree: i.tree.clone().expect("scored individuals have trees"),
            })
        })
        .collect();
    Ok(GaResult {
        initial: first,
        history,
        stop,
        population: pool,
        ranked,
    })
}
