//! Code-offset fuzzy extractor.
//!
//! Enrollment draws a random message `r` and publishes `aux = Encode(r) ^ R1`.
//! Reconstruction from a fresh read `R1'` decodes `aux ^ R1'` to `r'` and
//! returns `R2 = Encode(r') ^ aux`, the enrollment-time `R1`, whenever `R1'` is
//! within the code's correction radius of it.
//!
//! The enrollment value `R1` is the bitwise majority of [`ENROLL_READS`] noisy
//! reads, as done when provisioning real SRAM PUFs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitString, BitsError};
use crate::ecc::{CodeSpec, EccError};
use crate::puf::{Challenge, PufError, PufInstance};
use crate::rng::{self, tag};

/// Error-corrected response `R2`.
pub type StableResponse = BitString;

pub const ENROLL_READS: usize = 9;
pub const HELPER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error(transparent)]
    Puf(#[from] PufError),
    #[error(transparent)]
    Ecc(EccError),
    #[error("code length {code_bits} does not match PUF response width {puf_bits}")]
    Dimension { code_bits: usize, puf_bits: usize },
    #[error("helper data is for code `{helper}`, system uses `{system}`")]
    CodeMismatch { helper: String, system: String },
    #[error("reconstruction failed: {0}")]
    ReconstructFailure(String),
    #[error("malformed helper data: {0}")]
    Document(String),
}

impl From<EccError> for FuzzyError {
    fn from(e: EccError) -> Self {
        match e {
            EccError::DecodeFailure(m) => FuzzyError::ReconstructFailure(m),
            other => FuzzyError::Ecc(other),
        }
    }
}

/// Public helper string `aux`, bound to one code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HelperData {
    code_id: String,
    aux: BitString,
}

#[derive(Serialize, Deserialize)]
struct HelperDocument {
    schema_version: u32,
    code_id: String,
    n: usize,
    aux: String,
}

impl HelperData {
    pub fn new(code: &CodeSpec, aux: BitString) -> Result<Self, FuzzyError> {
        if aux.len() != code.n_bits() {
            return Err(FuzzyError::Dimension {
                code_bits: code.n_bits(),
                puf_bits: aux.len(),
            });
        }
        Ok(Self {
            code_id: code.code_id(),
            aux,
        })
    }

    pub fn code_id(&self) -> &str {
        &self.code_id
    }

    pub fn aux(&self) -> &BitString {
        &self.aux
    }

    pub fn n(&self) -> usize {
        self.aux.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&HelperDocument {
            schema_version: HELPER_SCHEMA_VERSION,
            code_id: self.code_id.clone(),
            n: self.aux.len(),
            aux: self.aux.to_hex(),
        })
        .expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, FuzzyError> {
        let doc: HelperDocument =
            serde_json::from_str(s).map_err(|e| FuzzyError::Document(e.to_string()))?;
        if doc.schema_version != HELPER_SCHEMA_VERSION {
            return Err(FuzzyError::Document(format!(
                "unsupported schema version {}",
                doc.schema_version
            )));
        }
        let code = CodeSpec::from_code_id(&doc.code_id)?;
        if doc.n != code.n_bits() {
            return Err(FuzzyError::Document(format!(
                "n = {} but code {} has {} bits",
                doc.n,
                doc.code_id,
                code.n_bits()
            )));
        }
        let aux = BitString::from_hex(&doc.aux, doc.n)
            .map_err(|e: BitsError| FuzzyError::Document(e.to_string()))?;
        HelperData::new(&code, aux)
    }

    fn check_code(&self, code: &CodeSpec) -> Result<(), FuzzyError> {
        let system = code.code_id();
        if self.code_id != system {
            return Err(FuzzyError::CodeMismatch {
                helper: self.code_id.clone(),
                system,
            });
        }
        Ok(())
    }
}

fn check_dimensions(puf: &PufInstance, code: &CodeSpec) -> Result<(), FuzzyError> {
    if puf.response_bits() != code.n_bits() {
        return Err(FuzzyError::Dimension {
            code_bits: code.n_bits(),
            puf_bits: puf.response_bits(),
        });
    }
    Ok(())
}

/// Enrolls `(puf, c0)`: returns the helper data and the enrolled `R2`.
pub fn enroll(
    puf: &PufInstance,
    c0: &Challenge,
    code: &CodeSpec,
    rng_seed: u64,
) -> Result<(HelperData, StableResponse), FuzzyError> {
    enroll_with_reads(puf, c0, code, rng_seed, ENROLL_READS)
}

/// [`enroll`] with an explicit (odd) number of majority-voted reads.
pub fn enroll_with_reads(
    puf: &PufInstance,
    c0: &Challenge,
    code: &CodeSpec,
    rng_seed: u64,
    reads: usize,
) -> Result<(HelperData, StableResponse), FuzzyError> {
    assert!(reads % 2 == 1, "majority vote needs an odd number of reads");
    check_dimensions(puf, code)?;
    let n = puf.response_bits();
    let mut votes = vec![0usize; n];
    for i in 0..reads {
        let read = puf.eval_raw(c0, rng::derive_seed(tag::ENROLL_READ, &[rng_seed, i as u64]))?;
        for (v, b) in votes.iter_mut().zip(read.iter()) {
            *v += b as usize;
        }
    }
    let r1 = BitString::from_bools(votes.iter().map(|&v| 2 * v > reads));
    enroll_from_read(code, &r1, rng::derive_seed(tag::ENROLL_SECRET, &[rng_seed]))
}

/// Enrollment on a given read `R1`: `aux = Encode(r) ^ R1` with `r` drawn
/// from `secret_seed`.
pub fn enroll_from_read(
    code: &CodeSpec,
    r1: &BitString,
    secret_seed: u64,
) -> Result<(HelperData, StableResponse), FuzzyError> {
    if r1.len() != code.n_bits() {
        return Err(FuzzyError::Dimension {
            code_bits: code.n_bits(),
            puf_bits: r1.len(),
        });
    }
    let mut s = rng::stream(tag::ENROLL_SECRET, &[secret_seed]);
    let secret = BitString::from_bools((0..code.k_bits()).map(|_| s.random::<bool>()));
    let codeword = code.encode(&secret)?;
    let aux = &codeword ^ r1;
    Ok((HelperData::new(code, aux)?, r1.clone()))
}

/// Reads the PUF once and reconstructs `R2`.
pub fn reconstruct(
    puf: &PufInstance,
    c0: &Challenge,
    helper: &HelperData,
    code: &CodeSpec,
    noise_seed: u64,
) -> Result<StableResponse, FuzzyError> {
    check_dimensions(puf, code)?;
    helper.check_code(code)?;
    let read = puf.eval_raw(c0, noise_seed)?;
    reconstruct_from_read(code, helper, &read)
}

pub fn reconstruct_from_read(
    code: &CodeSpec,
    helper: &HelperData,
    read: &BitString,
) -> Result<StableResponse, FuzzyError> {
    helper.check_code(code)?;
    if read.len() != code.n_bits() {
        return Err(FuzzyError::Dimension {
            code_bits: code.n_bits(),
            puf_bits: read.len(),
        });
    }
    let noisy_codeword = helper.aux() ^ read;
    let secret = code.decode(&noisy_codeword)?;
    Ok(&code.encode(&secret)? ^ helper.aux())
}
