//! Output stage: `R3 = H(R2 || C)`, the `E[1:0]` output mux, and statistical
//! unpredictability checks on produced responses.
//!
//! The hash input is the bit string `R2 || C` packed most significant bit first
//! with the final byte zero-padded, e.g. 127 + 128 = 255 bits hash as 32 bytes.
//! Both inputs have fixed widths and any deviation is rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::Sha256;
use sha3::{Digest, Sha3_256};
use thiserror::Error;

use crate::bits::BitString;
use crate::ecc::CodeSpec;
use crate::fuzzy::{self, FuzzyError, HelperData, StableResponse};
use crate::puf::{Challenge, PufInstance, RawResponse};

pub const OUTER_CHALLENGE_BITS: usize = 128;
pub const DIGEST_BYTES: usize = 32;
pub const MIN_REPORT_SAMPLES: usize = 1000;
/// Pass threshold in standard deviations.
pub const REPORT_SIGMAS: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HashError {
    #[error("R2 must be exactly {expected} bits, got {got}")]
    ResponseWidth { expected: usize, got: usize },
    #[error("outer challenge must be exactly {expected} bits, got {got}")]
    ChallengeWidth { expected: usize, got: usize },
    #[error("output mode E = {0:#04b} is reserved")]
    ReservedMode(u8),
    #[error("output mode {mode} requires {missing}")]
    MissingInput { mode: OutputMode, missing: &'static str },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("samples have inconsistent widths")]
    RaggedSamples,
    #[error("unknown hash `{0}`")]
    UnknownHash(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum HashAlg {
    #[default]
    #[serde(rename = "sha3-256")]
    Sha3_256,
    #[serde(rename = "sha2-256")]
    Sha2_256,
}

impl HashAlg {
    pub fn digest(self, data: &[u8]) -> [u8; DIGEST_BYTES] {
        match self {
            HashAlg::Sha3_256 => Sha3_256::digest(data).into(),
            HashAlg::Sha2_256 => Sha256::digest(data).into(),
        }
    }
}

impl FromStr for HashAlg {
    type Err = HashError;

    fn from_str(s: &str) -> Result<Self, HashError> {
        match s {
            "sha3-256" | "sha3" => Ok(HashAlg::Sha3_256),
            "sha2-256" | "sha2" | "sha256" => Ok(HashAlg::Sha2_256),
            other => Err(HashError::UnknownHash(other.into())),
        }
    }
}

impl fmt::Display for HashAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashAlg::Sha3_256 => "sha3-256",
            HashAlg::Sha2_256 => "sha2-256",
        })
    }
}

/// Final response `R3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FinalResponse([u8; DIGEST_BYTES]);

impl FinalResponse {
    pub fn from_bytes(bytes: [u8; DIGEST_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_BYTES] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn bits(&self) -> BitString {
        BitString::from_bytes(&self.0, 8 * DIGEST_BYTES).expect("whole bytes")
    }

    pub fn bit(&self, i: usize) -> u8 {
        (self.0[i / 8] >> (7 - i % 8)) & 1
    }
}

impl fmt::Debug for FinalResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinalResponse({})", self.to_hex())
    }
}

/// `R3 = H(R2 || C)` with `|R2| = n_code` and `|C| = 128` enforced.
pub fn compose_response(
    alg: HashAlg,
    n_code: usize,
    r2: &StableResponse,
    outer: &BitString,
) -> Result<FinalResponse, HashError> {
    if r2.len() != n_code {
        return Err(HashError::ResponseWidth {
            expected: n_code,
            got: r2.len(),
        });
    }
    if outer.len() != OUTER_CHALLENGE_BITS {
        return Err(HashError::ChallengeWidth {
            expected: OUTER_CHALLENGE_BITS,
            got: outer.len(),
        });
    }
    Ok(FinalResponse(alg.digest(&r2.concat(outer).to_bytes())))
}

/// The `E[1:0]` output selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// `E = 00`: raw `R1`, strong-PUF use.
    Raw,
    /// `E = 01`: error-corrected `R2`, key generation.
    Corrected,
    /// `E = 10`: hashed `R3`.
    Hashed,
}

impl OutputMode {
    pub fn from_bits(e: u8) -> Result<Self, HashError> {
        match e {
            0b00 => Ok(OutputMode::Raw),
            0b01 => Ok(OutputMode::Corrected),
            0b10 => Ok(OutputMode::Hashed),
            other => Err(HashError::ReservedMode(other)),
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            OutputMode::Raw => 0b00,
            OutputMode::Corrected => 0b01,
            OutputMode::Hashed => 0b10,
        }
    }
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E={:02b}", self.bits())
    }
}

impl FromStr for OutputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" => Ok(OutputMode::Raw),
            "corrected" => Ok(OutputMode::Corrected),
            "hashed" => Ok(OutputMode::Hashed),
            other => Err(format!("unknown mode `{other}` (raw|corrected|hashed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Raw(RawResponse),
    Stable(StableResponse),
    Final(FinalResponse),
}

impl Output {
    pub fn to_hex(&self) -> String {
        match self {
            Output::Raw(b) | Output::Stable(b) => b.to_hex(),
            Output::Final(f) => f.to_hex(),
        }
    }
}

/// Inputs to [`select_output`]; which fields are required depends on `mode`.
#[derive(Debug, Clone, Copy)]
pub struct OutputRequest<'a> {
    pub mode: OutputMode,
    pub c0: &'a Challenge,
    pub helper: Option<&'a HelperData>,
    pub outer: Option<&'a BitString>,
    pub noise_seed: u64,
}

pub fn select_output(
    puf: &PufInstance,
    code: &CodeSpec,
    alg: HashAlg,
    req: OutputRequest<'_>,
) -> Result<Output, HashError> {
    let need_helper = || {
        req.helper.ok_or(HashError::MissingInput {
            mode: req.mode,
            missing: "helper data",
        })
    };
    match req.mode {
        OutputMode::Raw => Ok(Output::Raw(
            puf.eval_raw(req.c0, req.noise_seed).map_err(FuzzyError::from)?,
        )),
        OutputMode::Corrected => {
            let helper = need_helper()?;
            Ok(Output::Stable(fuzzy::reconstruct(puf, req.c0, helper, code, req.noise_seed)?))
        }
        OutputMode::Hashed => {
            let helper = need_helper()?;
            let outer = req.outer.ok_or(HashError::MissingInput {
                mode: req.mode,
                missing: "outer challenge",
            })?;
            // reject a bad C before spending a decode on it
            if outer.len() != OUTER_CHALLENGE_BITS {
                return Err(HashError::ChallengeWidth {
                    expected: OUTER_CHALLENGE_BITS,
                    got: outer.len(),
                });
            }
            let r2 = fuzzy::reconstruct(puf, req.c0, helper, code, req.noise_seed)?;
            Ok(Output::Final(compose_response(alg, code.n_bits(), &r2, outer)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnpredictabilityReport {
    pub samples: usize,
    pub width: usize,
    pub ones_fraction: f64,
    pub monobit_z: f64,
    pub monobit_pass: bool,
    /// Largest per-position bias in standard deviations.
    pub max_bit_bias_z: f64,
    pub worst_bit: usize,
    pub bit_bias_pass: bool,
    /// Lag-1 autocorrelation of the concatenated stream (as +/-1 values).
    pub serial_correlation: f64,
    pub serial_z: f64,
    pub serial_pass: bool,
    pub pass: bool,
}

/// Monobit, per-position bias and lag-1 serial correlation tests at
/// [`REPORT_SIGMAS`].
pub fn unpredictability_report(samples: &[BitString]) -> Result<UnpredictabilityReport, HashError> {
    if samples.len() < MIN_REPORT_SAMPLES {
        return Err(HashError::TooFewSamples {
            min: MIN_REPORT_SAMPLES,
            got: samples.len(),
        });
    }
    let width = samples[0].len();
    if width == 0 || samples.iter().any(|s| s.len() != width) {
        return Err(HashError::RaggedSamples);
    }
    let s = samples.len() as f64;
    let total = s * width as f64;

    let mut per_bit = vec![0usize; width];
    for sample in samples {
        for (c, b) in per_bit.iter_mut().zip(sample.iter()) {
            *c += b as usize;
        }
    }
    let ones: usize = per_bit.iter().sum();
    let monobit_z = (ones as f64 - total / 2.0) / (total / 4.0).sqrt();

    let (worst_bit, max_bit_bias_z) = per_bit
        .iter()
        .map(|&c| ((c as f64 - s / 2.0) / (s / 4.0).sqrt()).abs())
        .enumerate()
        .fold((0, 0.0f64), |best, (i, z)| if z > best.1 { (i, z) } else { best });

    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for b in samples.iter().flat_map(|x| x.iter()) {
        let v = if b == 1 { 1.0 } else { -1.0 };
        if let Some(p) = prev {
            acc += p * v;
        }
        prev = Some(v);
    }
    let pairs = total - 1.0;
    let serial_correlation = acc / pairs;
    let serial_z = serial_correlation * pairs.sqrt();

    let monobit_pass = monobit_z.abs() <= REPORT_SIGMAS;
    let bit_bias_pass = max_bit_bias_z <= REPORT_SIGMAS;
    let serial_pass = serial_z.abs() <= REPORT_SIGMAS;
    Ok(UnpredictabilityReport {
        samples: samples.len(),
        width,
        ones_fraction: ones as f64 / total,
        monobit_z,
        monobit_pass,
        max_bit_bias_z,
        worst_bit,
        bit_bias_pass,
        serial_correlation,
        serial_z,
        serial_pass,
        pass: monobit_pass && bit_bias_pass && serial_pass,
    })
}
