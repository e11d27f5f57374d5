//! The PUF device attached to the interpreter: registered PUFs, the per-index
//! aux table, and the lookaside buffer.
//!
//! Randomness is derived from the device seed and per-instruction counters:
//! enrollment for `inner_puf_init` uses
//! `derive_seed("device/inner-puf-init", [seed, idx, C0, inits])`, and the
//! reconstruction read of `outer_puf_chal` uses
//! `derive_seed("device/outer-puf-chal", [seed, chals])`, where `inits` and
//! `chals` count earlier executions that reached the PUF (a failed
//! reconstruction also advances `chals`, so a retry sees a fresh read).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bits::BitString;
use crate::buffer::{sample_with_buffer, BufferEntry, BufferKey, LookasideBuffer, SampleContext, ZeroCapacity};
use crate::ecc::CodeSpec;
use crate::fuzzy::{self, HelperData};
use crate::hash::{FinalResponse, HashAlg, HashError, Output, OutputMode, OutputRequest};
use crate::puf::{Challenge, PufError, PufInstance};
use crate::rng::{self, tag};

/// Status codes written to `rd` by the custom instructions.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DeviceStatus {
    #[error("unknown or uninitialized PUF index")]
    UnknownIndex,
    #[error("parameter or output block outside memory")]
    MemoryFault,
    #[error("PUF response width does not match the device code")]
    WidthMismatch,
    #[error("reconstruction failed")]
    ReconstructFailure,
    #[error("inner challenge not accepted by this PUF")]
    InvalidChallenge,
}

impl DeviceStatus {
    pub const OK: u32 = 0;

    pub fn code(self) -> u32 {
        match self {
            DeviceStatus::UnknownIndex => 1,
            DeviceStatus::MemoryFault => 2,
            DeviceStatus::WidthMismatch => 3,
            DeviceStatus::ReconstructFailure => 4,
            DeviceStatus::InvalidChallenge => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxRecord {
    pub c0: Challenge,
    pub helper: HelperData,
}

#[derive(Debug, Clone)]
pub struct PufDevice {
    pufs: BTreeMap<u32, PufInstance>,
    aux_table: BTreeMap<u32, AuxRecord>,
    buffer: LookasideBuffer,
    code: CodeSpec,
    hash: HashAlg,
    seed: u64,
    inits: u64,
    chals: u64,
    prefill_on_init: bool,
}

impl PufDevice {
    pub fn new(code: CodeSpec, hash: HashAlg, buffer_capacity: usize, seed: u64) -> Result<Self, ZeroCapacity> {
        Ok(Self {
            pufs: BTreeMap::new(),
            aux_table: BTreeMap::new(),
            buffer: LookasideBuffer::new(buffer_capacity)?,
            code,
            hash,
            seed,
            inits: 0,
            chals: 0,
            prefill_on_init: true,
        })
    }

    /// Whether `inner_puf_init` seeds the buffer with the enrolled response
    /// (default `true`). When off, the first `outer_puf_chal` decodes.
    pub fn set_prefill_on_init(&mut self, on: bool) {
        self.prefill_on_init = on;
    }

    pub fn register(&mut self, idx: u32, puf: PufInstance) {
        self.pufs.insert(idx, puf);
    }

    pub fn puf(&self, idx: u32) -> Option<&PufInstance> {
        self.pufs.get(&idx)
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn hash(&self) -> HashAlg {
        self.hash
    }

    pub fn aux(&self, idx: u32) -> Option<&AuxRecord> {
        self.aux_table.get(&idx)
    }

    pub fn aux_table(&self) -> &BTreeMap<u32, AuxRecord> {
        &self.aux_table
    }

    pub fn buffer(&self) -> &LookasideBuffer {
        &self.buffer
    }

    /// Enrollment seed the next `inner_puf_init(idx, c0)` will use.
    pub fn init_seed(&self, idx: u32, c0: u64) -> u64 {
        rng::derive_seed(tag::DEVICE_INIT, &[self.seed, idx as u64, c0, self.inits])
    }

    /// Noise seed the next `outer_puf_chal` will use.
    pub fn chal_noise_seed(&self) -> u64 {
        rng::derive_seed(tag::DEVICE_CHAL, &[self.seed, self.chals])
    }

    pub fn inner_puf_init(&mut self, idx: u32, c0: u64) -> Result<(), DeviceStatus> {
        let puf = self.pufs.get(&idx).ok_or(DeviceStatus::UnknownIndex)?;
        if puf.response_bits() != self.code.n_bits() {
            return Err(DeviceStatus::WidthMismatch);
        }
        let challenge = Challenge::from_u64(c0);
        let (helper, r2) = fuzzy::enroll(puf, &challenge, &self.code, self.init_seed(idx, c0))
            .map_err(|e| match e {
                fuzzy::FuzzyError::Puf(PufError::BlockOutOfRange { .. }) => DeviceStatus::InvalidChallenge,
                fuzzy::FuzzyError::Puf(_) | fuzzy::FuzzyError::Dimension { .. } => DeviceStatus::WidthMismatch,
                _ => DeviceStatus::ReconstructFailure,
            })?;
        self.inits += 1;
        let key = BufferKey::new(idx, challenge.clone());
        if self.prefill_on_init {
            self.buffer.insert(
                key,
                BufferEntry {
                    r2,
                    helper: helper.clone(),
                },
            );
        } else {
            // a stale entry from an earlier enrollment must not survive
            self.buffer.invalidate(&key);
        }
        self.aux_table.insert(idx, AuxRecord { c0: challenge, helper });
        Ok(())
    }

    pub fn outer_puf_chal(&mut self, idx: u32, outer: &BitString) -> Result<FinalResponse, DeviceStatus> {
        let record = self.aux_table.get(&idx).ok_or(DeviceStatus::UnknownIndex)?;
        let puf = self.pufs.get(&idx).ok_or(DeviceStatus::UnknownIndex)?;
        let ctx = SampleContext {
            puf_id: idx,
            puf,
            code: &self.code,
            hash: self.hash,
        };
        let req = OutputRequest {
            mode: OutputMode::Hashed,
            c0: &record.c0,
            helper: Some(&record.helper),
            outer: Some(outer),
            noise_seed: self.chal_noise_seed(),
        };
        match sample_with_buffer(&mut self.buffer, ctx, req) {
            Ok(Output::Final(r3)) => {
                self.chals += 1;
                Ok(r3)
            }
            Ok(_) => unreachable!("hashed mode yields a final response"),
            Err(HashError::ChallengeWidth { .. }) => Err(DeviceStatus::WidthMismatch),
            Err(_) => {
                self.chals += 1;
                Err(DeviceStatus::ReconstructFailure)
            }
        }
    }
}
