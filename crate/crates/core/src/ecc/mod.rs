//! Error-correcting codes for the fuzzy extractor.
//!
//! [`CodeSpec`] presents both codecs on bit strings. BCH words map one bit per
//! codeword position; Reed–Solomon symbols are packed eight bits per symbol,
//! most significant bit first, so a single flipped bit costs one symbol of the
//! correction budget.

pub mod bch;
pub mod gf;
pub mod rs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bch::BchCode;
pub use gf::GaloisField;
pub use rs::RsCode;

use crate::bits::BitString;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EccError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("decode failure: {0}")]
    DecodeFailure(String),
    #[error("unknown code id `{0}`")]
    UnknownCode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeVariant {
    Bch,
    Rs,
}

impl FromStr for CodeVariant {
    type Err = EccError;

    fn from_str(s: &str) -> Result<Self, EccError> {
        match s {
            "bch" => Ok(CodeVariant::Bch),
            "rs" => Ok(CodeVariant::Rs),
            other => Err(EccError::UnknownCode(other.to_string())),
        }
    }
}

impl fmt::Display for CodeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeVariant::Bch => "bch",
            CodeVariant::Rs => "rs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSpec {
    Bch(BchCode),
    Rs(RsCode),
}

impl CodeSpec {
    pub fn bch_default() -> Self {
        CodeSpec::Bch(BchCode::default_127())
    }

    pub fn rs_default() -> Self {
        CodeSpec::Rs(RsCode::default_255())
    }

    pub fn default_for(variant: CodeVariant) -> Self {
        match variant {
            CodeVariant::Bch => Self::bch_default(),
            CodeVariant::Rs => Self::rs_default(),
        }
    }

    pub fn variant(&self) -> CodeVariant {
        match self {
            CodeSpec::Bch(_) => CodeVariant::Bch,
            CodeSpec::Rs(_) => CodeVariant::Rs,
        }
    }

    /// `bch-<n>-<k>-<t>-<poly hex>` or `rs-<n>-<k>-<t>-<poly hex>`.
    pub fn code_id(&self) -> String {
        let (n, k, t, poly) = match self {
            CodeSpec::Bch(c) => (c.n(), c.k(), c.t(), c.field().poly()),
            CodeSpec::Rs(c) => (c.n(), c.k(), c.t(), c.field().poly()),
        };
        format!("{}-{n}-{k}-{t}-{poly:x}", self.variant())
    }

    pub fn from_code_id(id: &str) -> Result<Self, EccError> {
        let unknown = || EccError::UnknownCode(id.to_string());
        let parts: Vec<&str> = id.split('-').collect();
        let [variant, n, k, t, poly] = parts.as_slice() else {
            return Err(unknown());
        };
        let variant: CodeVariant = variant.parse().map_err(|_| unknown())?;
        let num = |s: &str| s.parse::<usize>().map_err(|_| unknown());
        let (n, k, t) = (num(n)?, num(k)?, num(t)?);
        let poly = u32::from_str_radix(poly, 16).map_err(|_| unknown())?;
        let spec = match variant {
            CodeVariant::Bch => {
                if !(n + 1).is_power_of_two() {
                    return Err(unknown());
                }
                CodeSpec::Bch(BchCode::new((n + 1).trailing_zeros(), t, poly)?)
            }
            CodeVariant::Rs => CodeSpec::Rs(RsCode::new(n, k, poly)?),
        };
        if spec.code_id() != id {
            return Err(unknown());
        }
        Ok(spec)
    }

    /// Codeword length in bits (`n_code`).
    pub fn n_bits(&self) -> usize {
        match self {
            CodeSpec::Bch(c) => c.n(),
            CodeSpec::Rs(c) => 8 * c.n(),
        }
    }

    /// Message length in bits.
    pub fn k_bits(&self) -> usize {
        match self {
            CodeSpec::Bch(c) => c.k(),
            CodeSpec::Rs(c) => 8 * c.k(),
        }
    }

    /// Correction capability in bits (BCH) or symbols (RS).
    pub fn t(&self) -> usize {
        match self {
            CodeSpec::Bch(c) => c.t(),
            CodeSpec::Rs(c) => c.t(),
        }
    }

    pub fn encode(&self, message: &BitString) -> Result<BitString, EccError> {
        check_len(self.k_bits(), message.len())?;
        match self {
            CodeSpec::Bch(c) => Ok(BitString::from_bits(c.encode(message.as_slice())?)),
            CodeSpec::Rs(c) => {
                let cw = c.encode(&message.to_bytes())?;
                Ok(BitString::from_bytes(&cw, self.n_bits()).expect("byte aligned"))
            }
        }
    }

    pub fn decode(&self, received: &BitString) -> Result<BitString, EccError> {
        check_len(self.n_bits(), received.len())?;
        match self {
            CodeSpec::Bch(c) => Ok(BitString::from_bits(c.decode(received.as_slice())?)),
            CodeSpec::Rs(c) => {
                let msg = c.decode(&received.to_bytes())?;
                Ok(BitString::from_bytes(&msg, self.k_bits()).expect("byte aligned"))
            }
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), EccError> {
    if expected != got {
        return Err(EccError::Length { expected, got });
    }
    Ok(())
}
