use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::datagen::{Featurizer, NetworkTag, Target, TrainingExample};
use crate::Scalar;

use super::adam::{Adam, AdamConfig};
use super::knn::KnnIndex;
use super::loss::{accuracy, cross_entropy, mse};
use super::mlp::{HeadKind, Input, Mlp, Mode};
use super::NeuralError;

/// Sizes of the four networks. Each has `depth` equal-width hidden layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDims {
    pub featurizer: Featurizer,
    /// Hidden widths for act, rt1, rxn, rt2.
    pub hidden: [usize; 4],
    pub depth: usize,
}

impl PolicyDims {
    /// Full-size networks: 4096-bit inputs, 256-bit k-NN targets.
    pub fn full(n_templates: usize) -> Self {
        Self {
            featurizer: Featurizer {
                mlp: Featurizer::FULL_MLP,
                knn: Featurizer::FULL_KNN,
                n_templates,
            },
            hidden: [1000, 1200, 3000, 3000],
            depth: 4,
        }
    }

    pub fn toy(n_templates: usize) -> Self {
        Self {
            featurizer: Featurizer::toy(n_templates),
            hidden: [256, 256, 256, 256],
            depth: 2,
        }
    }

    pub fn input_dim(&self, tag: NetworkTag) -> usize {
        let f = &self.featurizer;
        match tag {
            NetworkTag::Act | NetworkTag::Rt1 => f.act_dim(),
            NetworkTag::Rxn => f.rxn_dim(),
            NetworkTag::Rt2 => f.rt2_dim(),
        }
    }

    pub fn output_dim(&self, tag: NetworkTag) -> usize {
        match tag {
            NetworkTag::Act => 4,
            NetworkTag::Rxn => self.featurizer.n_templates,
            NetworkTag::Rt1 | NetworkTag::Rt2 => self.featurizer.knn.nbits,
        }
    }

    pub fn kind(tag: NetworkTag) -> HeadKind {
        match tag {
            NetworkTag::Act | NetworkTag::Rxn => HeadKind::Classifier,
            NetworkTag::Rt1 | NetworkTag::Rt2 => HeadKind::Regressor,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let f = &self.featurizer;
        f.mlp.validate().map_err(|e| NeuralError::Dimension(e.to_string()))?;
        f.knn.validate().map_err(|e| NeuralError::Dimension(e.to_string()))?;
        if f.n_templates == 0 || self.hidden.contains(&0) {
            return Err(NeuralError::Dimension(
                "template count and hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The four policy networks plus the world identity they were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    pub dims: PolicyDims,
    pub templates_hash: u64,
    pub blocks_hash: u64,
    pub act: Mlp<T>,
    pub rt1: Mlp<T>,
    pub rxn: Mlp<T>,
    pub rt2: Mlp<T>,
}

impl<T: Scalar> Policy<T> {
    pub fn new(dims: PolicyDims, seed: u64, templates_hash: u64, blocks_hash: u64) -> Result<Self, NeuralError> {
        dims.validate()?;
        let make = |tag: NetworkTag| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::from(tag.code()));
            Mlp::new(
                PolicyDims::kind(tag),
                dims.input_dim(tag),
                &vec![dims.hidden[tag.code() as usize]; dims.depth],
                dims.output_dim(tag),
                &mut rng,
            )
        };
        Ok(Self {
            dims,
            templates_hash,
            blocks_hash,
            act: make(NetworkTag::Act)?,
            rt1: make(NetworkTag::Rt1)?,
            rxn: make(NetworkTag::Rxn)?,
            rt2: make(NetworkTag::Rt2)?,
        })
    }

    pub fn net(&self, tag: NetworkTag) -> &Mlp<T> {
        match tag {
            NetworkTag::Act => &self.act,
            NetworkTag::Rt1 => &self.rt1,
            NetworkTag::Rxn => &self.rxn,
            NetworkTag::Rt2 => &self.rt2,
        }
    }

    pub fn nets_mut(&mut self) -> [(NetworkTag, &mut Mlp<T>); 4] {
        [
            (NetworkTag::Act, &mut self.act),
            (NetworkTag::Rt1, &mut self.rt1),
            (NetworkTag::Rxn, &mut self.rxn),
            (NetworkTag::Rt2, &mut self.rt2),
        ]
    }

    /// Eval-mode outputs for one packed input row.
    pub fn predict_one(&self, tag: NetworkTag, input: &BitSet) -> Result<Vec<T>, NeuralError> {
        let out = self.net(tag).predict(Input::Binary(std::slice::from_ref(input)))?;
        Ok(out.row(0).to_vec())
    }

    pub fn all_finite(&self) -> bool {
        [&self.act, &self.rt1, &self.rxn, &self.rt2]
            .iter()
            .all(|n| n.all_finite())
    }

    /// Errors unless the checkpoint was trained on this template and block set.
    pub fn check_compatible(
        &self,
        templates_hash: u64,
        blocks_hash: u64,
        n_templates: usize,
    ) -> Result<(), NeuralError> {
        if self.dims.featurizer.n_templates != n_templates {
            return Err(NeuralError::Compatibility(format!(
                "model has {} templates, world has {n_templates}",
                self.dims.featurizer.n_templates
            )));
        }
        if self.templates_hash != templates_hash {
            return Err(NeuralError::Compatibility("template set differs from training".into()));
        }
        if self.blocks_hash != blocks_hash {
            return Err(NeuralError::Compatibility(
                "building-block set differs from training".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 64,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let a = &self.adam;
        let ok = a.lr > 0.0
            && a.eps > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && self.batch_size >= 2
            && self.epochs >= 1;
        if ok {
            Ok(())
        } else {
            Err(NeuralError::Dimension(
                "training rates and sizes must be positive, betas in [0, 1)".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    /// Argmax accuracy for classifiers; k-NN top-1 retrieval accuracy for regressors.
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub curves: BTreeMap<String, Vec<EpochStats>>,
}

impl TrainReport {
    pub fn last(&self, tag: NetworkTag) -> Option<&EpochStats> {
        self.curves.get(tag.name())?.last()
    }
}

struct Batch<T> {
    inputs: Vec<BitSet>,
    classes: Vec<usize>,
    dense: Option<Array2<T>>,
}

fn make_batch<T: Scalar>(examples: &[&TrainingExample], width: usize) -> Batch<T> {
    let inputs = examples.iter().map(|e| e.input.clone()).collect();
    let mut classes = Vec::new();
    let mut rows = Vec::new();
    for e in examples {
        match &e.target {
            Target::Class(c) => classes.push(*c as usize),
            Target::Bits(b) => rows.push(b),
        }
    }
    let dense = (!rows.is_empty()).then(|| super::loss::dense_rows(&rows, width));
    Batch { inputs, classes, dense }
}

/// Loss, outputs, forward cache and output gradient.
type BatchLoss<T> = (T, Array2<T>, Option<super::mlp::Cache<T>>, Array2<T>);

fn batch_loss<T: Scalar>(net: &Mlp<T>, b: &Batch<T>, mode: Mode) -> Result<BatchLoss<T>, NeuralError> {
    let (out, cache) = net.forward(Input::Binary(&b.inputs), mode)?;
    let (loss, dy) = match net.kind {
        HeadKind::Classifier => cross_entropy(out.view(), &b.classes),
        HeadKind::Regressor => mse(out.view(), b.dense.as_ref().expect("regression targets").view()),
    };
    Ok((loss, dy, cache, out))
}

const EVAL_CHUNK: usize = 512;

fn evaluate<T: Scalar>(
    net: &Mlp<T>,
    data: &[&TrainingExample],
    knn: Option<&KnnIndex<T>>,
) -> Result<(f64, Option<f64>), NeuralError> {
    let mut loss = 0.0;
    let mut hits = 0.0;
    let mut scored = false;
    for chunk in data.chunks(EVAL_CHUNK) {
        let b = make_batch::<T>(chunk, net.output_dim());
        let (l, _, _, out) = batch_loss(net, &b, Mode::Eval)?;
        loss += l.as_f64() * chunk.len() as f64;
        match net.kind {
            HeadKind::Classifier => {
                scored = true;
                hits += accuracy(out.view(), &b.classes) * chunk.len() as f64;
            }
            HeadKind::Regressor => {
                if let Some(index) = knn {
                    scored = true;
                    let target = b.dense.as_ref().unwrap();
                    for (row, t) in out.axis_iter(Axis(0)).zip(target.axis_iter(Axis(0))) {
                        let (top, _) = index.query(row.as_slice().unwrap(), 1, None)?[0];
                        if index.cosine(top, t.as_slice().unwrap()).as_f64() > 1.0 - 1e-6 {
                            hits += 1.0;
                        }
                    }
                }
            }
        }
    }
    let n = data.len() as f64;
    Ok((loss / n, scored.then_some(hits / n)))
}

fn train_net<T: Scalar>(
    net: &mut Mlp<T>,
    tag: NetworkTag,
    train: &[&TrainingExample],
    valid: &[&TrainingExample],
    cfg: &TrainConfig,
    knn: Option<&KnnIndex<T>>,
) -> Result<Vec<EpochStats>, NeuralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::from(tag.code()) + 16);
    let mut adam = Adam::new(cfg.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut seen = 0usize;
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            // Batch-norm statistics need at least two rows.
            if idx.len() < 2 {
                continue;
            }
            let ex: Vec<&TrainingExample> = idx.iter().map(|&i| train[i]).collect();
            let b = make_batch::<T>(&ex, net.output_dim());
            let (loss, dy, cache, _) = batch_loss(net, &b, Mode::Train)?;
            if !loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss {
                    network: tag.name(),
                    epoch,
                    batch: bi,
                });
            }
            let cache = cache.expect("train mode caches");
            let grads = net.backward(Input::Binary(&b.inputs), &cache, &dy);
            net.update_running_stats(&cache, idx.len());
            adam.step(net, &grads);
            total += loss.as_f64() * idx.len() as f64;
            seen += idx.len();
        }
        let (valid_loss, valid_accuracy) = if valid.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate(net, valid, knn)?;
            (Some(l), a)
        };
        curve.push(EpochStats {
            epoch,
            train_loss: if seen > 0 { total / seen as f64 } else { f64::NAN },
            valid_loss,
            valid_accuracy,
        });
    }
    Ok(curve)
}

/// Trains the four networks independently (in parallel, each with its own
/// shuffle stream). `knn` enables retrieval accuracy for the reactant heads.
pub fn train_policy<T: Scalar>(
    policy: &mut Policy<T>,
    train: &[TrainingExample],
    valid: &[TrainingExample],
    cfg: &TrainConfig,
    knn: Option<&KnnIndex<T>>,
) -> Result<TrainReport, NeuralError> {
    cfg.validate()?;
    let dims = policy.dims;
    for e in train.iter().chain(valid) {
        if e.input.len() != dims.input_dim(e.tag) {
            return Err(NeuralError::Dimension(format!(
                "{} example has input width {}, expected {}",
                e.tag.name(),
                e.input.len(),
                dims.input_dim(e.tag)
            )));
        }
    }
    let results: Vec<(NetworkTag, Result<Vec<EpochStats>, NeuralError>)> = policy
        .nets_mut()
        .into_par_iter()
        .map(|(tag, net)| {
            let tr: Vec<&TrainingExample> = train.iter().filter(|e| e.tag == tag).collect();
            let va: Vec<&TrainingExample> = valid.iter().filter(|e| e.tag == tag).collect();
            if tr.len() < 2 {
                return (tag, Ok(Vec::new()));
            }
            (tag, train_net(net, tag, &tr, &va, cfg, knn))
        })
        .collect();
    let mut report = TrainReport::default();
    for (tag, r) in results {
        report.curves.insert(tag.name().to_string(), r?);
    }
    Ok(report)
}
