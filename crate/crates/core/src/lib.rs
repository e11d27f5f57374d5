//! Software model of a PUF-based RISC-V security extension.
//!
//! Noisy PUF reads ([`puf`]) are stabilized by a code-offset fuzzy extractor
//! ([`fuzzy`]) over BCH or Reed–Solomon codes ([`ecc`]), then optionally hashed
//! with an outer challenge ([`hash`]). A FIFO lookaside buffer ([`buffer`])
//! skips decoding for repeated inner challenges, and [`isa`] exposes the
//! pipeline to an RV32I interpreter through two custom instructions.
//! [`attack`] and [`harness`] hold the modeling-attack and benchmark drivers.

pub mod attack;
pub mod bits;
pub mod buffer;
pub mod ecc;
pub mod exec;
pub mod fuzzy;
pub mod harness;
pub mod hash;
pub mod isa;
pub mod puf;
pub mod rng;

pub use bits::BitString;
pub use ecc::CodeSpec;
pub use exec::Backend;
pub use hash::{FinalResponse, HashAlg, OutputMode};
pub use puf::{Challenge, PufInstance, PufParams};
