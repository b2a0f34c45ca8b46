//! Evaluation analytics: structure-activity landscape index, target/product
//! property correlation, and corpus summaries.

use std::collections::BTreeMap;

use num_traits::{Num, Signed};
use serde::{Deserialize, Serialize};

use crate::molgraph::{descriptors, parse_smiles, DescriptorKind, MolError};
use crate::planner::TargetRecord;
use crate::synthtree::SyntheticTree;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no pairs left after excluding identical-similarity pairs")]
    EmptyAfterExclusion,
    #[error("property range must be positive")]
    ZeroRange,
    #[error("similarity outside [0, 1] at pair {0}")]
    Similarity(usize),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance in {0} values")]
    DegenerateVariance(&'static str),
    #[error(transparent)]
    Molecule(#[from] MolError),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyPair<T> {
    pub target: String,
    pub product: String,
    pub target_value: T,
    pub product_value: T,
    pub similarity: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyPairSet<T> {
    pub property: String,
    pub pairs: Vec<PropertyPair<T>>,
    /// Overrides the observed range when set.
    pub range: Option<T>,
}

impl<T: Clone + PartialOrd + Num> PropertyPairSet<T> {
    /// `max - min` over every target and product value.
    pub fn observed_range(&self) -> Option<T> {
        let mut vals = self.pairs.iter().flat_map(|p| [&p.target_value, &p.product_value]);
        let first = vals.next()?.clone();
        let (lo, hi) = vals.fold((first.clone(), first), |(lo, hi), v| {
            (
                if *v < lo { v.clone() } else { lo },
                if *v > hi { v.clone() } else { hi },
            )
        });
        Some(hi - lo)
    }
}

/// Mean over pairs of `(|d_i - d_j| / range) / (1 - sim)`. Pairs with
/// similarity exactly 1 are excluded.
pub fn sali<T: Clone + PartialOrd + Signed>(set: &PropertyPairSet<T>) -> Result<T, MetricsError> {
    let range = set
        .range
        .clone()
        .or_else(|| set.observed_range())
        .ok_or(MetricsError::EmptyAfterExclusion)?;
    if range <= T::zero() {
        return Err(MetricsError::ZeroRange);
    }
    let mut sum = T::zero();
    let mut n = T::zero();
    for (i, p) in set.pairs.iter().enumerate() {
        if p.similarity < T::zero() || p.similarity > T::one() {
            return Err(MetricsError::Similarity(i));
        }
        if p.similarity == T::one() {
            continue;
        }
        let delta = (p.target_value.clone() - p.product_value.clone()).abs() / range.clone();
        sum = sum + delta / (T::one() - p.similarity.clone());
        n = n + T::one();
    }
    if n.is_zero() {
        return Err(MetricsError::EmptyAfterExclusion);
    }
    Ok(sum / n)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let n = xs.len();
    if n < 2 {
        return Err(MetricsError::TooFewPoints(n));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(MetricsError::DegenerateVariance("target"));
    }
    if syy == 0.0 {
        return Err(MetricsError::DegenerateVariance("product"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub property: String,
    pub n: usize,
    pub pearson: f64,
    pub sali: Option<f64>,
    /// Scatter data as CSV.
    pub scatter: String,
}

pub fn scatter_csv(set: &PropertyPairSet<f64>) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &set.pairs {
        w.serialize(p).map_err(|e| MetricsError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn correlation_report(sets: &[PropertyPairSet<f64>]) -> Result<Vec<Correlation>, MetricsError> {
    sets.iter()
        .map(|s| {
            let xs: Vec<f64> = s.pairs.iter().map(|p| p.target_value).collect();
            let ys: Vec<f64> = s.pairs.iter().map(|p| p.product_value).collect();
            Ok(Correlation {
                property: s.property.clone(),
                n: s.pairs.len(),
                pearson: pearson(&xs, &ys)?,
                sali: sali(s).ok(),
                scatter: scatter_csv(s)?,
            })
        })
        .collect()
}

/// Descriptor pairs for every record that produced a molecule.
pub fn property_pairs(records: &[TargetRecord], kind: DescriptorKind) -> Result<PropertyPairSet<f64>, MetricsError> {
    let pairs = records
        .iter()
        .filter_map(|r| r.product.as_ref().map(|p| (r, p)))
        .map(|(r, p)| {
            let t = descriptors(&parse_smiles(&r.target)?);
            let d = descriptors(&parse_smiles(p)?);
            Ok(PropertyPair {
                target: r.target.clone(),
                product: p.clone(),
                target_value: kind.value(&t),
                product_value: kind.value(&d),
                similarity: r.similarity,
            })
        })
        .collect::<Result<_, MetricsError>>()?;
    Ok(PropertyPairSet {
        property: kind.name().into(),
        pairs,
        range: None,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub trees: usize,
    pub reactions: usize,
    /// Longest leaf-to-root reaction chain.
    pub depth_histogram: BTreeMap<usize, usize>,
    pub reactions_histogram: BTreeMap<usize, usize>,
    pub template_usage: BTreeMap<usize, usize>,
    /// Keyed by building-block SMILES.
    pub block_usage: BTreeMap<String, usize>,
}

/// Reaction depth of the root.
pub fn tree_depth(tree: &SyntheticTree) -> usize {
    let mut depth = vec![0usize; tree.nodes.len()];
    // Reactions are appended in construction order, so reactants precede products.
    for r in &tree.reactions {
        depth[r.product] = 1 + r.reactants.iter().map(|&m| depth[m]).max().unwrap_or(0);
    }
    tree.root().map_or(0, |root| depth[root])
}

pub fn corpus_summary(trees: &[SyntheticTree]) -> CorpusSummary {
    let mut s = CorpusSummary {
        trees: trees.len(),
        ..CorpusSummary::default()
    };
    for t in trees {
        s.reactions += t.reactions.len();
        *s.depth_histogram.entry(tree_depth(t)).or_default() += 1;
        *s.reactions_histogram.entry(t.reactions.len()).or_default() += 1;
        for r in &t.reactions {
            *s.template_usage.entry(r.template).or_default() += 1;
        }
        for n in t.leaves() {
            *s.block_usage.entry(n.smiles.clone()).or_default() += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests;
