//! Packed bit strings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid bit character {0:?} at position {1}")]
pub struct ParseBitsError(pub char, pub usize);

/// A fixed-length string of bits stored in 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self::zeros(len);
        for w in &mut b.words {
            *w = u64::MAX;
        }
        b.trim();
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    /// The low `len` bits of `value`, bit 0 first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut b = Self::zeros(len);
        if len > 0 {
            b.words[0] = value;
            b.trim();
        }
        b
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `true` for odd weight.
    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u32, |acc, w| acc ^ w.count_ones()) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.weight() == self.len
    }

    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the bitwise AND, i.e. the GF(2) dot product.
    pub fn dot(&self, other: &BitString) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        let mut b = Self::zeros(chars.len());
        for (i, c) in chars.into_iter().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                other => return Err(ParseBitsError(other, i)),
            }
        }
        Ok(b)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_is_trimmed() {
        let b = BitString::ones(70);
        assert_eq!(b.weight(), 70);
        assert!(b.is_all_ones());
        assert!(!b.parity());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!("01x".parse::<BitString>(), Err(ParseBitsError('x', 2)));
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b = BitString::from_bools(&bits);
            let back: BitString = b.to_string().parse().unwrap();
            prop_assert_eq!(&back, &b);
            prop_assert_eq!(b.weight(), bits.iter().filter(|&&x| x).count());
            prop_assert_eq!(b.parity(), bits.iter().filter(|&&x| x).count() % 2 == 1);
        }

        #[test]
        fn xor_distance_is_weight(a in proptest::collection::vec(any::<bool>(), 130), b in proptest::collection::vec(any::<bool>(), 130)) {
            let (x, y) = (BitString::from_bools(&a), BitString::from_bools(&b));
            prop_assert_eq!(x.distance(&y), x.xor(&y).weight());
        }
    }
}
