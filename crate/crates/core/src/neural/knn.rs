use ndarray::Array2;

use crate::bits::BitSet;
use crate::Scalar;

use super::NeuralError;

/// Exact cosine nearest-neighbour search over building-block fingerprints.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex<T> {
    rows: Array2<T>,
    norms: Vec<T>,
}

impl<T: Scalar> KnnIndex<T> {
    /// One row per block, in block-id order.
    pub fn from_bits(fps: &[BitSet]) -> Result<Self, NeuralError> {
        let d = fps.first().map_or(0, |f| f.len());
        if fps.iter().any(|f| f.len() != d) {
            return Err(NeuralError::Dimension("fingerprints differ in length".into()));
        }
        let mut rows = Array2::zeros((fps.len(), d));
        for (r, f) in fps.iter().enumerate() {
            for i in f.ones() {
                rows[[r, i]] = T::one();
            }
        }
        Ok(Self::from_rows(rows))
    }

    pub fn from_rows(rows: Array2<T>) -> Self {
        let norms = rows.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        Self { rows, norms }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn cosine(&self, id: usize, q: &[T]) -> T {
        let q = ndarray::ArrayView1::from(q);
        let qn = q.dot(&q).sqrt();
        let denom = qn * self.norms[id];
        if denom > T::zero() {
            self.rows.row(id).dot(&q) / denom
        } else {
            T::zero()
        }
    }

    /// Top-`k` `(id, cosine)` by descending cosine, ties by ascending id,
    /// restricted to `mask` when given.
    pub fn query(&self, q: &[T], k: usize, mask: Option<&BitSet>) -> Result<Vec<(usize, T)>, NeuralError> {
        if q.len() != self.dim() {
            return Err(NeuralError::Dimension(format!(
                "query length {}, index {}",
                q.len(),
                self.dim()
            )));
        }
        if mask.is_some_and(|m| m.len() != self.len()) {
            return Err(NeuralError::Dimension("mask length differs from index size".into()));
        }
        let mut hits: Vec<(usize, T)> = (0..self.len())
            .filter(|&i| mask.is_none_or(|m| m.get(i)))
            .map(|i| (i, self.cosine(i, q)))
            .collect();
        if hits.is_empty() {
            return Err(NeuralError::EmptyCandidateSet);
        }
        hits.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        hits.truncate(k);
        Ok(hits)
    }
}
