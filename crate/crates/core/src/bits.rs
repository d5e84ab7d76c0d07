//! Packed bit strings and their on-disk forms.
//!
//! Bits are stored most-significant-bit first inside each byte, which is
//! also the packed file layout. Padding bits in the final byte are kept at
//! zero so that the raw bytes are canonical.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    /// Builds from packed MSB-first bytes, keeping only the first `len` bits.
    pub fn from_packed(bytes: &[u8], len: usize) -> Result<Self> {
        let need = len.div_ceil(8);
        if bytes.len() < need {
            return Err(Error::TooShort {
                what: "packed bit buffer",
                needed: len,
                got: bytes.len() * 8,
            });
        }
        let mut bytes = bytes[..need].to_vec();
        if !len.is_multiple_of(8) {
            let keep = 0xffu8 << (8 - len % 8);
            *bytes.last_mut().unwrap() &= keep;
        }
        Ok(Self { bytes, len })
    }

    /// Parses ASCII `0`/`1`, ignoring whitespace.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut out = Self::with_capacity(text.len());
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => out.push(false),
                '1' => out.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Error::Parse(format!("unexpected {c:?} at offset {i}"))),
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_packed(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Panics if `i` is out of range.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 0x80 >> (i % 8);
        if bit {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn count_ones(&self) -> usize {
        // padding bits are zero, so whole-byte popcount is exact
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Fraction of 1-bits; 0 for the empty string.
    pub fn ones_frequency(&self) -> f64 {
        if self.len == 0 {
            0.0
        } else {
            self.count_ones() as f64 / self.len as f64
        }
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::InvalidArgument(format!(
                "hamming distance of lengths {} and {}",
                self.len, other.len
            )));
        }
        Ok(self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        assert!(start <= end && end <= self.len);
        (start..end).map(|i| self.get(i)).collect()
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && (0..self.len).all(|i| self.get(i) == other.get(i))
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        self.iter().chain(other.iter()).collect()
    }

    /// Unpacks to one byte (0 or 1) per bit, for inner loops.
    pub fn to_symbols(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Raw packed file: every byte contributes 8 bits, no header.
    pub fn read_raw<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let len = bytes.len() * 8;
        Ok(Self { bytes, len })
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut out = Self::with_capacity(iter.size_hint().0);
        for bit in iter {
            out.push(bit);
        }
        out
    }
}

impl Extend<bool> for BitString {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        for bit in iter {
            self.push(bit);
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ascii())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitString({})", self.to_ascii())
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

/// Writes the two-string record layout: 8-byte little-endian length `n`,
/// then the packed bytes of `first` and `second` (each `ceil(n/8)` bytes).
pub fn write_pair<W: Write>(mut writer: W, first: &BitString, second: &BitString) -> Result<()> {
    if first.len() != second.len() {
        return Err(Error::InvalidArgument(format!(
            "paired strings differ in length ({} vs {})",
            first.len(),
            second.len()
        )));
    }
    writer.write_all(&(first.len() as u64).to_le_bytes())?;
    writer.write_all(first.as_packed())?;
    writer.write_all(second.as_packed())?;
    Ok(())
}

pub fn read_pair<R: Read>(mut reader: R) -> Result<(BitString, BitString)> {
    let mut header = [0u8; 8];
    reader.read_exact(&mut header)?;
    let n = usize::try_from(u64::from_le_bytes(header))
        .map_err(|_| Error::Parse("record length does not fit in memory".into()))?;
    let nbytes = n.div_ceil(8);
    let mut buf = vec![0u8; nbytes];
    reader.read_exact(&mut buf)?;
    let first = BitString::from_packed(&buf, n)?;
    reader.read_exact(&mut buf)?;
    let second = BitString::from_packed(&buf, n)?;
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_packing() {
        let s = BitString::from_ascii("1000 0001 1").unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.as_packed(), &[0x81, 0x80]);
        assert_eq!(s.count_ones(), 3);
    }

    #[test]
    fn ascii_rejects_other_symbols() {
        assert!(matches!(BitString::from_ascii("01x"), Err(Error::Parse(_))));
    }

    #[test]
    fn from_packed_masks_padding() {
        let s = BitString::from_packed(&[0xff], 3).unwrap();
        assert_eq!(s.as_packed(), &[0xe0]);
        assert_eq!(s.count_ones(), 3);
        assert!(BitString::from_packed(&[0xff], 9).is_err());
    }

    #[test]
    fn pair_header_is_little_endian_length() {
        let a = BitString::from_ascii("1").unwrap();
        let mut buf = Vec::new();
        write_pair(&mut buf, &a, &a).unwrap();
        assert_eq!(buf, vec![1, 0, 0, 0, 0, 0, 0, 0, 0x80, 0x80]);
        assert!(write_pair(Vec::new(), &a, &BitString::new()).is_err());
    }

    proptest! {
        #[test]
        fn pair_roundtrip(a in proptest::collection::vec(any::<bool>(), 0..200), flip in any::<u64>()) {
            let first: BitString = a.iter().copied().collect();
            let second: BitString = a.iter().enumerate().map(|(i, b)| b ^ ((flip >> (i % 64)) & 1 == 1)).collect();
            let mut buf = Vec::new();
            write_pair(&mut buf, &first, &second).unwrap();
            prop_assert_eq!(buf.len(), 8 + 2 * a.len().div_ceil(8));
            let (x, y) = read_pair(buf.as_slice()).unwrap();
            prop_assert_eq!(x, first);
            prop_assert_eq!(y, second);
        }
    }
}
