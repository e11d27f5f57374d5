//! Deterministic randomness.
//!
//! Every random draw in the crate comes from a ChaCha20 stream whose 256-bit
//! key is `SHA-256(len(tag) || tag || w0 || w1 || ...)`, with the length as a
//! big-endian u32 and each word as a big-endian u64. Distinct purpose tags
//! give independent streams for the same numeric seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

/// Purpose tags. Changing any of these changes every derived value.
pub mod tag {
    pub const SRAM_REFERENCE: &str = "sram/reference";
    pub const SRAM_NOISE: &str = "sram/noise";
    pub const ARBITER_WEIGHTS: &str = "arbiter/weights";
    pub const ARBITER_NOISE: &str = "arbiter/noise";
    pub const XOR_CHAIN_SEED: &str = "xor/chain-seed";
    pub const XOR_CHAIN_NOISE: &str = "xor/chain-noise";
    pub const RELIABILITY: &str = "reliability/challenges";
    pub const ENROLL_READ: &str = "enroll/read";
    pub const ENROLL_SECRET: &str = "enroll/secret";
    pub const DEVICE_INIT: &str = "device/inner-puf-init";
    pub const DEVICE_CHAL: &str = "device/outer-puf-chal";
    pub const CRP_RAW: &str = "crp/raw";
    pub const CRP_HASHED: &str = "crp/hashed";
    pub const LOGREG_INIT: &str = "logreg/init";
    pub const LOGREG_SPLIT: &str = "logreg/split";
    pub const BENCH: &str = "bench";
}

/// Derives a 64-bit seed from a tag and a list of words.
pub fn derive_seed(tag: &str, words: &[u64]) -> u64 {
    let key = derive_key(tag, words);
    u64::from_be_bytes(key[..8].try_into().unwrap())
}

pub fn stream(tag: &str, words: &[u64]) -> Stream {
    ChaCha20Rng::from_seed(derive_key(tag, words))
}

fn derive_key(tag: &str, words: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((tag.len() as u32).to_be_bytes());
    h.update(tag.as_bytes());
    for w in words {
        h.update(w.to_be_bytes());
    }
    h.finalize().into()
}
