//! Fixed-length bit vector used for fingerprints, masks and GA individuals.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(len);
        for i in indices {
            s.set(i, true);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn hamming(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len);
        Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn or(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len);
        Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packed little-endian bytes, `ceil(len / 8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        self.words.iter().flat_map(|w| w.to_le_bytes()).take(n).collect()
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut s = Self::new(len);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            s.words[i] = u64::from_le_bytes(buf);
        }
        // Reject stray bits past `len`.
        if !len.is_multiple_of(64) {
            if let Some(last) = s.words.last() {
                if last >> (len % 64) != 0 {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// Concatenation, `self` first.
    pub fn concat(&self, other: &Self) -> Self {
        let mut out = Self::new(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn set_get_flip() {
        let mut b = BitSet::new(130);
        b.set(0, true);
        b.set(129, true);
        b.flip(64);
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        b.flip(64);
        assert_eq!(b.count_ones(), 2);
    }

    #[test]
    fn from_bytes_rejects_stray_bits() {
        assert!(BitSet::from_bytes(4, &[0b1_0000]).is_none());
        assert!(BitSet::from_bytes(4, &[0b1000]).is_some());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(len in 1usize..300, seed in any::<u64>()) {
            let idx: Vec<usize> = (0..len).filter(|i| (seed.rotate_left(*i as u32 % 64) ^ *i as u64) & 3 == 0).collect();
            let b = BitSet::from_indices(len, idx);
            prop_assert_eq!(BitSet::from_bytes(len, &b.to_bytes()).unwrap(), b);
        }

        #[test]
        fn concat_preserves_bits(a in proptest::collection::vec(any::<bool>(), 1..100),
                                 b in proptest::collection::vec(any::<bool>(), 1..100)) {
            let x = BitSet::from_indices(a.len(), a.iter().enumerate().filter(|p| *p.1).map(|p| p.0));
            let y = BitSet::from_indices(b.len(), b.iter().enumerate().filter(|p| *p.1).map(|p| p.0));
            let c = x.concat(&y);
            prop_assert_eq!(c.len(), a.len() + b.len());
            for (i, v) in a.iter().chain(b.iter()).enumerate() {
                prop_assert_eq!(c.get(i), *v);
            }
        }
    }
}
