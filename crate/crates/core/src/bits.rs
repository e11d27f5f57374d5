//! Fixed-width bit strings.
//!
//! Bits are stored one per byte (`0` or `1`). Index 0 is the most significant
//! bit when a string is packed into bytes or rendered as hex; the final byte is
//! zero-padded on the right when the width is not a multiple of eight.

use std::fmt;
use std::ops::{BitXor, Index};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid hex string: {0}")]
    Hex(String),
    #[error("expected {expected} bytes for a {bits}-bit string, got {got}")]
    ByteLength { bits: usize, expected: usize, got: usize },
    #[error("nonzero padding bits in final byte")]
    Padding,
    #[error("width mismatch: {left} vs {right}")]
    Width { left: usize, right: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    /// Builds a string from bit values; any nonzero input byte is a one.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        Self {
            bits: bits.into_iter().map(|b| (b != 0) as u8).collect(),
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self {
            bits: bits.into_iter().map(u8::from).collect(),
        }
    }

    /// The `width` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64, "width {width} exceeds 64");
        Self {
            bits: (0..width)
                .map(|i| ((value >> (width - 1 - i)) & 1) as u8)
                .collect(),
        }
    }

    /// Unpacks the first `len` bits of `bytes` (MSB first).
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, BitsError> {
        let expected = len.div_ceil(8);
        if bytes.len() != expected {
            return Err(BitsError::ByteLength {
                bits: len,
                expected,
                got: bytes.len(),
            });
        }
        let rem = len % 8;
        if rem != 0 {
            let pad_mask = 0xffu8 >> rem;
            if bytes[expected - 1] & pad_mask != 0 {
                return Err(BitsError::Padding);
            }
        }
        Ok(Self {
            bits: (0..len)
                .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
                .collect(),
        })
    }

    pub fn from_hex(hex_str: &str, len: usize) -> Result<Self, BitsError> {
        let bytes = hex::decode(hex_str).map_err(|e| BitsError::Hex(e.to_string()))?;
        Self::from_bytes(&bytes, len)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        self.bits[i] = (bit != 0) as u8;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Interprets up to 64 bits as an unsigned integer, MSB first.
    pub fn to_u64(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= b << (7 - i % 8);
        }
        out
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + other.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    pub fn try_xor(&self, other: &BitString) -> Result<BitString, BitsError> {
        if self.len() != other.len() {
            return Err(BitsError::Width {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(BitString {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len(), other.len(), "hamming distance of unequal widths");
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    /// Panics on width mismatch; use [`BitString::try_xor`] for untrusted input.
    fn bitxor(self, rhs: &BitString) -> BitString {
        self.try_xor(rhs).expect("xor of unequal widths")
    }
}

impl Index<usize> for BitString {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}b, {})", self.len(), self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Serialized as `{"len": n, "hex": "..."}`.
#[derive(Serialize, Deserialize)]
struct BitStringRepr {
    len: usize,
    hex: String,
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BitStringRepr {
            len: self.len(),
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = BitStringRepr::deserialize(d)?;
        BitString::from_hex(&repr.hex, repr.len).map_err(serde::de::Error::custom)
    }
}
