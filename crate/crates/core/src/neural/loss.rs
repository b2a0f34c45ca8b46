use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::bits::BitSet;
use crate::Scalar;

/// Row-wise softmax, max-shifted.
pub fn softmax<T: Scalar>(logits: ArrayView2<T>) -> Array2<T> {
    let mut p = logits.to_owned();
    for mut row in p.rows_mut() {
        let m = row.fold(T::neg_infinity(), |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    p
}

/// Softmax over the entries allowed by `mask`; exactly zero elsewhere.
/// `None` if the mask admits nothing.
pub fn masked_softmax<T: Scalar>(logits: ArrayView1<T>, mask: &[bool]) -> Option<Array1<T>> {
    let m = logits
        .iter()
        .zip(mask)
        .filter(|(_, &k)| k)
        .map(|(&v, _)| v)
        .fold(None, |a: Option<T>, v| Some(a.map_or(v, |a| a.max(v))))?;
    let mut p: Array1<T> = logits
        .iter()
        .zip(mask)
        .map(|(&v, &k)| if k { (v - m).exp() } else { T::zero() })
        .collect();
    let s = p.sum();
    p.mapv_inplace(|v| v / s);
    Some(p)
}

/// Mean softmax cross-entropy and its gradient w.r.t. the logits.
pub fn cross_entropy<T: Scalar>(logits: ArrayView2<T>, targets: &[usize]) -> (T, Array2<T>) {
    let n = T::of(targets.len() as f64);
    let mut p = softmax(logits);
    let mut loss = T::zero();
    for (mut row, &t) in p.rows_mut().into_iter().zip(targets) {
        loss = loss - row[t].max(T::min_positive_value()).ln();
        row[t] = row[t] - T::one();
    }
    p.mapv_inplace(|v| v / n);
    (loss / n, p)
}

/// Mean squared error over all elements and its gradient.
pub fn mse<T: Scalar>(out: ArrayView2<T>, target: ArrayView2<T>) -> (T, Array2<T>) {
    let diff = &out - &target;
    let count = T::of(diff.len() as f64);
    let loss = diff.iter().map(|&d| d * d).sum::<T>() / count;
    (loss, diff * (T::of(2.0) / count))
}

pub fn argmax<T: Scalar>(row: ArrayView1<T>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy<T: Scalar>(logits: ArrayView2<T>, targets: &[usize]) -> f64 {
    let hits = logits
        .axis_iter(Axis(0))
        .zip(targets)
        .filter(|(row, &t)| argmax(row.view()) == t)
        .count();
    hits as f64 / targets.len().max(1) as f64
}

/// Dense 0/1 matrix from packed rows.
pub fn dense_rows<T: Scalar>(rows: &[&BitSet], width: usize) -> Array2<T> {
    let mut m = Array2::zeros((rows.len(), width));
    for (r, b) in rows.iter().enumerate() {
        for i in b.ones() {
            m[[r, i]] = T::one();
        }
    }
    m
}
