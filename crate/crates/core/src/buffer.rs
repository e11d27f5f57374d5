//! Lookaside buffer of error-corrected responses.
//!
//! A bounded cache keyed by `(puf id, C0)` holding `(R2, aux)`. Sampling
//! checks the buffer before running the fuzzy-extractor decode; a hit skips
//! the PUF read and the decode entirely. Replacement is FIFO: hits do not
//! reorder entries, and re-inserting a present key replaces its entry in
//! place. An LRU policy is available for comparison.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ecc::CodeSpec;
use crate::fuzzy::{self, HelperData, StableResponse};
use crate::hash::{compose_response, HashAlg, HashError, Output, OutputMode, OutputRequest, OUTER_CHALLENGE_BITS};
use crate::puf::{Challenge, PufInstance};

pub const DEFAULT_CAPACITY: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("buffer capacity must be at least 1")]
pub struct ZeroCapacity;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BufferKey {
    pub puf_id: u32,
    pub c0: Challenge,
}

impl BufferKey {
    pub fn new(puf_id: u32, c0: Challenge) -> Self {
        Self { puf_id, c0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferEntry {
    pub r2: StableResponse,
    pub helper: HelperData,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Fifo,
    Lru,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferCounters {
    pub hits: u64,
    pub misses: u64,
    pub decode_calls: u64,
    pub evictions: u64,
}

impl BufferCounters {
    pub fn lookups(&self) -> u64 {
        self.hits + self.misses
    }
}

#[derive(Debug, Clone)]
pub struct LookasideBuffer {
    capacity: usize,
    policy: Policy,
    entries: VecDeque<(BufferKey, BufferEntry)>,
    counters: BufferCounters,
}

impl LookasideBuffer {
    pub fn new(capacity: usize) -> Result<Self, ZeroCapacity> {
        Self::with_policy(capacity, Policy::Fifo)
    }

    pub fn with_policy(capacity: usize, policy: Policy) -> Result<Self, ZeroCapacity> {
        if capacity == 0 {
            return Err(ZeroCapacity);
        }
        Ok(Self {
            capacity,
            policy,
            entries: VecDeque::with_capacity(capacity),
            counters: BufferCounters::default(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counters(&self) -> BufferCounters {
        self.counters
    }

    /// Keys from oldest to newest.
    pub fn keys(&self) -> impl Iterator<Item = &BufferKey> {
        self.entries.iter().map(|(k, _)| k)
    }

    fn position(&self, key: &BufferKey) -> Option<usize> {
        self.entries.iter().position(|(k, _)| k == key)
    }

    pub fn lookup(&mut self, key: &BufferKey) -> Option<BufferEntry> {
        match self.position(key) {
            Some(i) => {
                self.counters.hits += 1;
                if self.policy == Policy::Lru {
                    let item = self.entries.remove(i).expect("index in range");
                    self.entries.push_back(item);
                    return Some(self.entries.back().expect("just pushed").1.clone());
                }
                Some(self.entries[i].1.clone())
            }
            None => {
                self.counters.misses += 1;
                None
            }
        }
    }

    pub fn insert(&mut self, key: BufferKey, entry: BufferEntry) {
        if let Some(i) = self.position(&key) {
            self.entries[i].1 = entry;
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
            self.counters.evictions += 1;
        }
        self.entries.push_back((key, entry));
    }

    /// Drops `key` if present. Not counted as an eviction.
    pub fn invalidate(&mut self, key: &BufferKey) {
        if let Some(i) = self.position(key) {
            self.entries.remove(i);
        }
    }

    /// Records a decode performed on behalf of this buffer.
    pub(crate) fn note_decode(&mut self) {
        self.counters.decode_calls += 1;
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// The PUF a sample is drawn from.
#[derive(Debug, Clone, Copy)]
pub struct SampleContext<'a> {
    pub puf_id: u32,
    pub puf: &'a PufInstance,
    pub code: &'a CodeSpec,
    pub hash: HashAlg,
}

/// Produces the output for `req.mode`, consulting `buf` first.
///
/// Raw mode bypasses the buffer. For the other modes a hit reuses the cached
/// `R2`; a miss reads the PUF, decodes with `req.helper` (required on a miss),
/// and caches the result. Failed reconstructions are not cached.
pub fn sample_with_buffer(
    buf: &mut LookasideBuffer,
    ctx: SampleContext<'_>,
    req: OutputRequest<'_>,
) -> Result<Output, HashError> {
    if req.mode == OutputMode::Raw {
        return crate::hash::select_output(ctx.puf, ctx.code, ctx.hash, req);
    }
    if req.mode == OutputMode::Hashed {
        match req.outer {
            None => {
                return Err(HashError::MissingInput {
                    mode: req.mode,
                    missing: "outer challenge",
                })
            }
            Some(c) if c.len() != OUTER_CHALLENGE_BITS => {
                return Err(HashError::ChallengeWidth {
                    expected: OUTER_CHALLENGE_BITS,
                    got: c.len(),
                })
            }
            Some(_) => {}
        }
    }
    let key = BufferKey::new(ctx.puf_id, req.c0.clone());
    let r2 = match buf.lookup(&key) {
        Some(entry) => entry.r2,
        None => {
            let helper = req.helper.ok_or(HashError::MissingInput {
                mode: req.mode,
                missing: "helper data",
            })?;
            buf.note_decode();
            let r2 = fuzzy::reconstruct(ctx.puf, req.c0, helper, ctx.code, req.noise_seed)?;
            buf.insert(
                key,
                BufferEntry {
                    r2: r2.clone(),
                    helper: helper.clone(),
                },
            );
            r2
        }
    };
    match req.mode {
        OutputMode::Corrected => Ok(Output::Stable(r2)),
        OutputMode::Hashed => Ok(Output::Final(compose_response(
            ctx.hash,
            ctx.code.n_bits(),
            &r2,
            req.outer.expect("checked above"),
        )?)),
        OutputMode::Raw => unreachable!(),
    }
}
