//! Program image formats.
//!
//! The hex format has one `address: word` pair per line, both in hexadecimal
//! (optional `0x` prefixes). Blank lines and text after `#` are ignored.
//! Raw binaries are flat little-endian images loaded at a base address.

use super::IsaError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    /// `(address, word)` pairs in file order.
    pub words: Vec<(u32, u32)>,
}

fn parse_hex(s: &str) -> Option<u32> {
    let s = s.trim();
    let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u32::from_str_radix(s, 16).ok()
}

impl Program {
    /// Consecutive words starting at `base`.
    pub fn from_words(base: u32, words: &[u32]) -> Self {
        Self {
            words: words
                .iter()
                .enumerate()
                .map(|(i, &w)| (base + 4 * i as u32, w))
                .collect(),
        }
    }

    pub fn parse_hex(text: &str) -> Result<Self, IsaError> {
        let mut words = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || IsaError::Program(format!("line {}: expected `address: word`", n + 1));
            let (addr, word) = line.split_once(':').ok_or_else(bad)?;
            let addr = parse_hex(addr).ok_or_else(bad)?;
            if addr % 4 != 0 {
                return Err(IsaError::Program(format!("line {}: unaligned address {addr:#x}", n + 1)));
            }
            words.push((addr, parse_hex(word).ok_or_else(bad)?));
        }
        Ok(Self { words })
    }

    pub fn from_binary(base: u32, bytes: &[u8]) -> Result<Self, IsaError> {
        if bytes.len() % 4 != 0 {
            return Err(IsaError::Program("binary length is not a multiple of 4".into()));
        }
        let words: Vec<u32> = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self::from_words(base, &words))
    }

    pub fn to_hex(&self) -> String {
        self.words
            .iter()
            .map(|(a, w)| format!("{a:08x}: {w:08x}\n"))
            .collect()
    }
}
