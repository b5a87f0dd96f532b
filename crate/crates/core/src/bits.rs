//! Fixed-length bitset used for configurations, reach layers and masks.
//!
//! Bits are stored least-significant-bit first inside 64-bit words, so bit `i`
//! lives in `words[i / 64]` at position `i % 64`. Bits past `len` are always zero.

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitSet[{}]{{", self.len)?;
        let mut first = true;
        for i in self.ones() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self { len, words: vec![0; word_count(len)] }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self { len, words: vec![u64::MAX; word_count(len)] };
        s.trim();
        s
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), word_count(len), "word count does not match bit length");
        let mut s = Self { len, words };
        s.trim();
        s
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        if value {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn none(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn any(&self) -> bool {
        !self.none()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, &w)| w != 0).map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> Ones<'_> {
        Ones { words: &self.words, index: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    pub fn complement(&self) -> Self {
        let mut out = Self { len: self.len, words: self.words.iter().map(|w| !w).collect() };
        out.trim();
        out
    }

    pub fn union_with(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// `self |= (src << shift) & mask`, i.e. bit `i` of `src` is moved to `i + shift`.
    pub(crate) fn or_shifted_up(&mut self, src: &Self, shift: usize, mask: &Self) {
        let words = self.words.len();
        let (ws, bs) = (shift / 64, shift % 64);
        for k in ws..words {
            let lo = src.words[k - ws];
            let mut v = lo << bs;
            if bs != 0 && k > ws {
                v |= src.words[k - ws - 1] >> (64 - bs);
            }
            self.words[k] |= v & mask.words[k];
        }
    }

    /// `self |= (src >> shift) & mask`, i.e. bit `i` of `src` is moved to `i - shift`.
    pub(crate) fn or_shifted_down(&mut self, src: &Self, shift: usize, mask: &Self) {
        let words = self.words.len();
        let (ws, bs) = (shift / 64, shift % 64);
        for k in 0..words {
            let idx = k + ws;
            if idx >= words {
                break;
            }
            let mut v = src.words[idx] >> bs;
            if bs != 0 && idx + 1 < words {
                v |= src.words[idx + 1] << (64 - bs);
            }
            self.words[k] |= v & mask.words[k];
        }
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.index * 64 + bit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifts_match_naive() {
        let len = 200;
        let src = BitSet::from_indices(len, [0, 1, 63, 64, 65, 127, 150, 199]);
        let mask = BitSet::full(len);
        for shift in [1usize, 7, 63, 64, 65, 130] {
            let mut up = BitSet::new(len);
            up.or_shifted_up(&src, shift, &mask);
            let want: Vec<_> = src.ones().map(|i| i + shift).filter(|&i| i < len).collect();
            assert_eq!(up.ones().collect::<Vec<_>>(), want, "up {shift}");

            let mut down = BitSet::new(len);
            down.or_shifted_down(&src, shift, &mask);
            let want: Vec<_> = src.ones().filter(|&i| i >= shift).map(|i| i - shift).collect();
            assert_eq!(down.ones().collect::<Vec<_>>(), want, "down {shift}");
        }
    }

    #[test]
    fn complement_keeps_tail_clear() {
        let s = BitSet::new(70).complement();
        assert_eq!(s.count_ones(), 70);
        assert_eq!(s.words()[1] >> 6, 0);
    }
}
