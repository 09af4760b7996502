//! Dense bit-vector subsets of a finite group's element indices.

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sets above this size serialize as a hex bitmap instead of an index list.
pub const INDEX_LIST_LIMIT: usize = 64;

/// A subset of `{0, .., order-1}` stored as packed 64-bit words.
///
/// Bits at positions `>= order` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ElementSet {
    order: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

fn word_count(order: usize) -> usize {
    order.div_ceil(64)
}

impl ElementSet {
    pub fn empty(order: usize) -> Self {
        ElementSet { order, words: vec![0; word_count(order)] }
    }

    pub fn full(order: usize) -> Self {
        let mut s = ElementSet { order, words: vec![!0; word_count(order)] };
        s.clear_padding();
        s
    }

    pub fn singleton(order: usize, index: usize) -> Self {
        let mut s = Self::empty(order);
        s.insert(index);
        s
    }

    /// Builds a set from element indices; fails on any index `>= order`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(order: usize, indices: I) -> Result<Self> {
        let mut s = Self::empty(order);
        for i in indices {
            if i >= order {
                return Err(Error::InvalidParameter(format!(
                    "element index {i} out of range for order {order}"
                )));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_predicate(order: usize, pred: impl Fn(usize) -> bool) -> Self {
        let mut s = Self::empty(order);
        for i in (0..order).filter(|&i| pred(i)) {
            s.insert(i);
        }
        s
    }

    fn clear_padding(&mut self) {
        let rem = self.order % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        index < self.order && (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    /// Panics if `index >= order`.
    #[inline]
    pub fn insert(&mut self, index: usize) {
        assert!(index < self.order, "index {index} out of range");
        self.words[index / 64] |= 1 << (index % 64);
    }

    #[inline]
    pub fn remove(&mut self, index: usize) {
        if index < self.order {
            self.words[index / 64] &= !(1 << (index % 64));
        }
    }

    /// Flips one bit. Used by the fault-injection harness.
    pub fn toggle(&mut self, index: usize) {
        assert!(index < self.order);
        self.words[index / 64] ^= 1 << (index % 64);
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.order
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Smallest index not in the set, if any.
    pub fn first_missing(&self) -> Option<usize> {
        (0..self.order).find(|&i| !self.contains(i))
    }

    pub fn union_with(&mut self, other: &ElementSet) {
        debug_assert_eq!(self.order, other.order);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        ElementSet { order: self.order, words }
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        ElementSet { order: self.order, words }
    }

    pub fn complement(&self) -> ElementSet {
        let mut out = ElementSet {
            order: self.order,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_padding();
        out
    }

    pub fn intersection_len(&self, other: &ElementSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// `|self \ other|`
    pub fn difference_len(&self, other: &ElementSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & !b).count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(&bytes[..self.order.div_ceil(8)])
    }

    pub fn from_hex(order: usize, text: &str) -> Result<Self> {
        let bytes = hex::decode(text).map_err(|e| Error::Parse(format!("hex bitmap: {e}")))?;
        if bytes.len() != order.div_ceil(8) {
            return Err(Error::Parse(format!(
                "hex bitmap has {} bytes, expected {}",
                bytes.len(),
                order.div_ceil(8)
            )));
        }
        let mut s = Self::empty(order);
        for (i, byte) in bytes.iter().enumerate() {
            s.words[i / 8] |= (*byte as u64) << (8 * (i % 8));
        }
        let before = s.len();
        s.clear_padding();
        if s.len() != before {
            return Err(Error::Parse("hex bitmap has bits beyond the group order".into()));
        }
        Ok(s)
    }
}

/// ORs the `len` bits of `src` starting at `src_pos` into `dst` starting at `dst_pos`.
pub(crate) fn or_bit_range(dst: &mut [u64], dst_pos: usize, src: &[u64], src_pos: usize, len: usize) {
    let mut done = 0;
    while done < len {
        // align chunks on destination words
        let d = dst_pos + done;
        let off = d % 64;
        let n = (64 - off).min(len - done);
        let v = read_bits(src, src_pos + done, n);
        dst[d / 64] |= v << off;
        done += n;
    }
}

#[inline]
fn read_bits(src: &[u64], pos: usize, n: usize) -> u64 {
    let w = pos / 64;
    let o = pos % 64;
    let mut v = src[w] >> o;
    if o != 0 && o + n > 64 {
        v |= src[w + 1] << (64 - o);
    }
    if n < 64 {
        v &= (1u64 << n) - 1;
    }
    v
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.len() <= INDEX_LIST_LIMIT {
            serializer.collect_seq(self.iter())
        } else {
            let mut map = serializer.serialize_map(Some(4))?;
            map.serialize_entry("encoding", "hex")?;
            map.serialize_entry("order", &self.order)?;
            map.serialize_entry("size", &self.len())?;
            map.serialize_entry("bits", &self.to_hex())?;
            map.end()
        }
    }
}

/// Wire form of an [`ElementSet`]. A bare index list carries no group order,
/// so it decodes against the smallest order that holds its largest index
/// unless re-homed with [`SetWire::into_set`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum SetWire {
    Indices(Vec<usize>),
    Hex { encoding: String, order: usize, size: usize, bits: String },
}

impl SetWire {
    pub fn into_set(self, order: usize) -> Result<ElementSet> {
        match self {
            SetWire::Indices(v) => ElementSet::from_indices(order, v),
            SetWire::Hex { encoding, order: o, size, bits } => {
                if encoding != "hex" {
                    return Err(Error::Parse(format!("unknown set encoding {encoding:?}")));
                }
                if o != order {
                    return Err(Error::Parse(format!("set order {o} does not match group order {order}")));
                }
                let s = ElementSet::from_hex(order, &bits)?;
                if s.len() != size {
                    return Err(Error::Parse("hex bitmap size field mismatch".into()));
                }
                Ok(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SetWire::deserialize(deserializer)?;
        let order = match &wire {
            SetWire::Indices(v) => v.iter().max().map_or(1, |m| m + 1),
            SetWire::Hex { order, .. } => *order,
        };
        wire.into_set(order).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut s = ElementSet::from_indices(70, [0, 3, 64, 69]).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.contains(69) && !s.contains(70));
        s.remove(3);
        assert_eq!(s.to_vec(), vec![0, 64, 69]);
        assert_eq!(s.complement().len(), 67);
        assert!(ElementSet::full(70).is_full());
        assert_eq!(s.first_missing(), Some(1));
        assert!(ElementSet::from_indices(5, [5]).is_err());
    }

    #[test]
    fn bit_range_copy_matches_naive() {
        let src = ElementSet::from_predicate(200, |i| i % 7 == 0 || i % 11 == 3);
        for (sp, dp, len) in [(0, 0, 200), (5, 70, 100), (63, 1, 130), (100, 0, 64), (1, 63, 65)] {
            let mut dst = ElementSet::empty(200);
            or_bit_range(dst.words_mut(), dp, src.words(), sp, len);
            let expect =
                ElementSet::from_predicate(200, |i| i >= dp && i < dp + len && src.contains(i - dp + sp));
            assert_eq!(dst, expect, "sp={sp} dp={dp} len={len}");
        }
    }

    #[test]
    fn json_small_is_index_list() {
        let s = ElementSet::from_indices(7, [3, 1, 2]).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,2,3]");
    }

    #[test]
    fn json_large_is_hex() {
        let s = ElementSet::from_predicate(130, |i| i % 2 == 0);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["encoding"], "hex");
        assert_eq!(v["size"], 65);
        let back: ElementSet = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
