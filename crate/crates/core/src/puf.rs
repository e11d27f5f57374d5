//! Seedable PUF models.
//!
//! Three kinds are simulated:
//!
//! * **SRAM** (weak PUF): `num_blocks` blocks of `block_bits` power-up bits.
//!   Reference bits are a pure function of `(seed, block, bit)`. Each read
//!   flips every bit independently with probability `flip_prob`.
//! * **Arbiter** (strong PUF): the additive delay model. A challenge `c` of
//!   `stages` bits maps to parity features `phi`, and the response bit is
//!   `[w . phi + e > 0]` with `w ~ N(0, 1)^(stages + 1)` drawn from the seed and
//!   `e ~ N(0, sigma^2)` drawn per evaluation.
//! * **XOR arbiter**: the XOR of `chains` independent arbiter chains.
//!
//! Strong PUFs answer one bit per challenge. To fill an `n`-bit raw response
//! from a 64-bit inner challenge `c0`, bit `i` is the response to the public
//! sub-challenge [`expand_challenge`]`(c0, i)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::exec::Backend;
use crate::rng::{self, tag};

/// Width of the inner challenge `C0`.
pub const INNER_CHALLENGE_BITS: usize = 64;
pub const DEFAULT_STAGES: usize = 64;
pub const DEFAULT_XOR_CHAINS: usize = 4;
pub const DEFAULT_SRAM_FLIP_PROB: f64 = 0.05;
pub const PUF_SCHEMA_VERSION: u32 = 1;

/// Noisy raw response `R1`.
pub type RawResponse = BitString;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PufError {
    #[error("invalid PUF parameter: {0}")]
    InvalidParam(String),
    #[error("challenge width {got} does not match expected width {expected}")]
    ChallengeWidth { expected: usize, got: usize },
    #[error("block index {index} out of range (num_blocks = {num_blocks})")]
    BlockOutOfRange { index: u64, num_blocks: u64 },
    #[error("operation not supported by a {0} PUF")]
    Unsupported(&'static str),
    #[error("reliability target {0} is unreachable")]
    UnreachableTarget(f64),
    #[error("too few trials: {got} < {min}")]
    TooFewTrials { min: usize, got: usize },
    #[error("malformed PUF document: {0}")]
    Document(String),
}

/// A fixed-width challenge bit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Challenge(BitString);

impl Challenge {
    pub fn new(bits: BitString) -> Result<Self, PufError> {
        if bits.is_empty() {
            return Err(PufError::InvalidParam("challenge width must be > 0".into()));
        }
        Ok(Self(bits))
    }

    /// A 64-bit inner challenge, most significant bit first.
    pub fn from_u64(value: u64) -> Self {
        Self(BitString::from_u64(value, INNER_CHALLENGE_BITS))
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

/// Parity (phase) features of the additive delay model.
///
/// `phi[i] = prod_{j >= i} (1 - 2 c[j])` for `i < s`, and `phi[s] = 1`.
pub fn parity_features(challenge: &Challenge, stages: usize) -> Result<Vec<f64>, PufError> {
    if challenge.width() != stages {
        return Err(PufError::ChallengeWidth {
            expected: stages,
            got: challenge.width(),
        });
    }
    Ok(parity_features_unchecked(challenge.bits().as_slice()))
}

pub(crate) fn parity_features_unchecked(bits: &[u8]) -> Vec<f64> {
    let s = bits.len();
    let mut phi = vec![1.0; s + 1];
    let mut acc = 1.0;
    for i in (0..s).rev() {
        if bits[i] == 1 {
            acc = -acc;
        }
        phi[i] = acc;
    }
    phi
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Public expansion of an inner challenge into the `index`-th sub-challenge of
/// `stages` bits.
///
/// The inner challenge is folded 64 bits at a time into `base` with
/// [`mix64`]; sub-challenge word `j` is `mix64(base ^ mix64(index << 16 | j))`,
/// and the sub-challenge takes the leading `stages` bits of those words.
pub fn expand_challenge(c0: &Challenge, index: usize, stages: usize) -> Challenge {
    let base = c0
        .bits()
        .as_slice()
        .chunks(64)
        .fold(0u64, |h, chunk| {
            let word = chunk.iter().fold(0u64, |a, &b| (a << 1) | b as u64);
            mix64(h ^ word)
        });
    let words = stages.div_ceil(64);
    let bits = (0..words).flat_map(|j| {
        let w = mix64(base ^ mix64(((index as u64) << 16) | j as u64));
        (0..64).map(move |b| ((w >> (63 - b)) & 1) as u8)
    });
    Challenge(BitString::from_bits(bits.take(stages)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PufParams {
    Sram {
        num_blocks: u64,
        block_bits: usize,
        flip_prob: f64,
    },
    Arbiter {
        stages: usize,
        noise_sigma: f64,
        response_bits: usize,
    },
    Xor {
        stages: usize,
        chains: usize,
        noise_sigma: f64,
        response_bits: usize,
    },
}

impl PufParams {
    pub fn sram(block_bits: usize, flip_prob: f64) -> Self {
        PufParams::Sram {
            num_blocks: 1024,
            block_bits,
            flip_prob,
        }
    }

    pub fn arbiter(response_bits: usize, noise_sigma: f64) -> Self {
        PufParams::Arbiter {
            stages: DEFAULT_STAGES,
            noise_sigma,
            response_bits,
        }
    }

    pub fn xor(response_bits: usize, noise_sigma: f64) -> Self {
        PufParams::Xor {
            stages: DEFAULT_STAGES,
            chains: DEFAULT_XOR_CHAINS,
            noise_sigma,
            response_bits,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PufParams::Sram { .. } => "sram",
            PufParams::Arbiter { .. } => "arbiter",
            PufParams::Xor { .. } => "xor",
        }
    }

    /// Width of the raw response `R1`.
    pub fn response_bits(&self) -> usize {
        match *self {
            PufParams::Sram { block_bits, .. } => block_bits,
            PufParams::Arbiter { response_bits, .. } | PufParams::Xor { response_bits, .. } => {
                response_bits
            }
        }
    }

    /// Copy with the noise level replaced (`flip_prob` for SRAM, `sigma` otherwise).
    pub fn with_noise(&self, noise: f64) -> Self {
        let mut p = self.clone();
        match &mut p {
            PufParams::Sram { flip_prob, .. } => *flip_prob = noise,
            PufParams::Arbiter { noise_sigma, .. } | PufParams::Xor { noise_sigma, .. } => {
                *noise_sigma = noise
            }
        }
        p
    }

    pub fn validate(&self) -> Result<(), PufError> {
        let bad = |m: String| Err(PufError::InvalidParam(m));
        match *self {
            PufParams::Sram {
                num_blocks,
                block_bits,
                flip_prob,
            } => {
                if num_blocks == 0 || block_bits == 0 {
                    return bad("num_blocks and block_bits must be > 0".into());
                }
                if !(0.0..0.5).contains(&flip_prob) {
                    return bad(format!("flip probability {flip_prob} not in [0, 0.5)"));
                }
            }
            PufParams::Arbiter {
                stages,
                noise_sigma,
                response_bits,
            } => check_arbiter(stages, noise_sigma, response_bits)?,
            PufParams::Xor {
                stages,
                chains,
                noise_sigma,
                response_bits,
            } => {
                if chains == 0 {
                    return bad("xor PUF needs at least one chain".into());
                }
                check_arbiter(stages, noise_sigma, response_bits)?
            }
        }
        Ok(())
    }
}

fn check_arbiter(stages: usize, sigma: f64, response_bits: usize) -> Result<(), PufError> {
    if stages == 0 {
        return Err(PufError::InvalidParam("zero stages".into()));
    }
    if response_bits == 0 {
        return Err(PufError::InvalidParam("response_bits must be > 0".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(PufError::InvalidParam(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SramPuf {
    seed: u64,
    num_blocks: u64,
    block_bits: usize,
    flip_prob: f64,
}

impl SramPuf {
    fn block_index(&self, c0: &Challenge) -> Result<u64, PufError> {
        if c0.width() != INNER_CHALLENGE_BITS {
            return Err(PufError::ChallengeWidth {
                expected: INNER_CHALLENGE_BITS,
                got: c0.width(),
            });
        }
        let index = c0.to_u64().expect("64-bit challenge");
        if index >= self.num_blocks {
            return Err(PufError::BlockOutOfRange {
                index,
                num_blocks: self.num_blocks,
            });
        }
        Ok(index)
    }

    fn reference_block(&self, block: u64) -> BitString {
        let mut s = rng::stream(tag::SRAM_REFERENCE, &[self.seed, block]);
        let mut bits = Vec::with_capacity(self.block_bits);
        while bits.len() < self.block_bits {
            let w: u64 = s.random();
            let take = (self.block_bits - bits.len()).min(64);
            bits.extend((0..take).map(|b| ((w >> (63 - b)) & 1) as u8));
        }
        BitString::from_bits(bits)
    }

    fn read_block(&self, block: u64, noise_seed: u64) -> BitString {
        let mut out = self.reference_block(block);
        if self.flip_prob > 0.0 {
            let mut s = rng::stream(tag::SRAM_NOISE, &[self.seed, noise_seed, block]);
            for i in 0..out.len() {
                if s.random::<f64>() < self.flip_prob {
                    out.flip(i);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbiterPuf {
    seed: u64,
    weights: Vec<f64>,
    noise_sigma: f64,
}

impl ArbiterPuf {
    pub fn new(seed: u64, stages: usize, noise_sigma: f64) -> Result<Self, PufError> {
        check_arbiter(stages, noise_sigma, 1)?;
        let mut s = rng::stream(tag::ARBITER_WEIGHTS, &[seed]);
        let weights = (0..=stages).map(|_| s.sample(StandardNormal)).collect();
        Ok(Self {
            seed,
            weights,
            noise_sigma,
        })
    }

    pub fn stages(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// `w . phi(c)` without noise.
    pub fn delay_difference(&self, c: &Challenge) -> Result<f64, PufError> {
        let phi = parity_features(c, self.stages())?;
        Ok(dot(&self.weights, &phi))
    }

    /// One evaluation with noise drawn from `(seed, noise_seed)`.
    pub fn eval_bit(&self, c: &Challenge, noise_seed: u64) -> Result<u8, PufError> {
        let delta = self.delay_difference(c)?;
        let eps = if self.noise_sigma > 0.0 {
            let mut s = rng::stream(tag::ARBITER_NOISE, &[self.seed, noise_seed]);
            self.noise_sigma * s.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        Ok((delta + eps > 0.0) as u8)
    }

    pub fn eval_noiseless(&self, c: &Challenge) -> Result<u8, PufError> {
        Ok((self.delay_difference(c)? > 0.0) as u8)
    }

    fn delays_for(&self, c0: &Challenge, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let sub = expand_challenge(c0, i, self.stages());
                dot(&self.weights, &parity_features_unchecked(sub.bits().as_slice()))
            })
            .collect()
    }

    fn read(&self, delays: &[f64], c0: &Challenge, noise_seed: Option<u64>) -> BitString {
        match noise_seed {
            Some(ns) if self.noise_sigma > 0.0 => {
                let mut words = vec![self.seed, ns];
                words.extend(c0_words(c0));
                let mut s = rng::stream(tag::ARBITER_NOISE, &words);
                BitString::from_bools(delays.iter().map(|d| {
                    let e: f64 = s.sample(StandardNormal);
                    d + self.noise_sigma * e > 0.0
                }))
            }
            _ => BitString::from_bools(delays.iter().map(|&d| d > 0.0)),
        }
    }
}

fn c0_words(c0: &Challenge) -> Vec<u64> {
    c0.bits()
        .as_slice()
        .chunks(64)
        .map(|ch| ch.iter().fold(0u64, |a, &b| (a << 1) | b as u64))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorArbiterPuf {
    chains: Vec<ArbiterPuf>,
}

impl XorArbiterPuf {
    pub fn new(seed: u64, stages: usize, chains: usize, noise_sigma: f64) -> Result<Self, PufError> {
        if chains == 0 {
            return Err(PufError::InvalidParam("xor PUF needs at least one chain".into()));
        }
        let chains = (0..chains as u64)
            .map(|i| ArbiterPuf::new(rng::derive_seed(tag::XOR_CHAIN_SEED, &[seed, i]), stages, noise_sigma))
            .collect::<Result<_, _>>()?;
        Ok(Self { chains })
    }

    /// Builds an XOR PUF from explicit chains, which must share a stage count.
    pub fn from_chains(chains: Vec<ArbiterPuf>) -> Result<Self, PufError> {
        let Some(first) = chains.first() else {
            return Err(PufError::InvalidParam("xor PUF needs at least one chain".into()));
        };
        if chains.iter().any(|c| c.stages() != first.stages()) {
            return Err(PufError::InvalidParam("xor chains must share a stage count".into()));
        }
        Ok(Self { chains })
    }

    pub fn chains(&self) -> &[ArbiterPuf] {
        &self.chains
    }

    pub fn stages(&self) -> usize {
        self.chains[0].stages()
    }

    pub fn eval_bit(&self, c: &Challenge, noise_seed: u64) -> Result<u8, PufError> {
        self.chains
            .iter()
            .try_fold(0u8, |acc, ch| Ok(acc ^ ch.eval_bit(c, noise_seed)?))
    }

    pub fn eval_noiseless(&self, c: &Challenge) -> Result<u8, PufError> {
        self.chains
            .iter()
            .try_fold(0u8, |acc, ch| Ok(acc ^ ch.eval_noiseless(c)?))
    }

    fn read(&self, c0: &Challenge, n: usize, noise_seed: Option<u64>) -> BitString {
        let mut out = BitString::zeros(n);
        for (k, chain) in self.chains.iter().enumerate() {
            let delays = chain.delays_for(c0, n);
            let ns = noise_seed.map(|ns| rng::derive_seed(tag::XOR_CHAIN_NOISE, &[ns, k as u64]));
            let bits = chain.read(&delays, c0, ns);
            out = &out ^ &bits;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Sram(SramPuf),
    Arbiter(ArbiterPuf),
    Xor(XorArbiterPuf),
}

/// A constructed PUF. Immutable; evaluation is a pure function of
/// `(instance, challenge, noise seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PufInstance {
    seed: u64,
    params: PufParams,
    model: Model,
}

/// On-disk form of a [`PufInstance`]. Responses are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PufDocument {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub params: PufParams,
}

pub fn new_puf(seed: u64, params: PufParams) -> Result<PufInstance, PufError> {
    PufInstance::new(seed, params)
}

impl PufInstance {
    pub fn new(seed: u64, params: PufParams) -> Result<Self, PufError> {
        params.validate()?;
        let model = match params {
            PufParams::Sram {
                num_blocks,
                block_bits,
                flip_prob,
            } => Model::Sram(SramPuf {
                seed,
                num_blocks,
                block_bits,
                flip_prob,
            }),
            PufParams::Arbiter {
                stages,
                noise_sigma,
                ..
            } => Model::Arbiter(ArbiterPuf::new(seed, stages, noise_sigma)?),
            PufParams::Xor {
                stages,
                chains,
                noise_sigma,
                ..
            } => Model::Xor(XorArbiterPuf::new(seed, stages, chains, noise_sigma)?),
        };
        Ok(Self { seed, params, model })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &PufParams {
        &self.params
    }

    pub fn kind(&self) -> &'static str {
        self.params.kind()
    }

    /// `n_code`, the raw response width.
    pub fn response_bits(&self) -> usize {
        self.params.response_bits()
    }

    pub fn as_arbiter(&self) -> Option<&ArbiterPuf> {
        match &self.model {
            Model::Arbiter(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_xor(&self) -> Option<&XorArbiterPuf> {
        match &self.model {
            Model::Xor(x) => Some(x),
            _ => None,
        }
    }

    /// The same instance with the noise disabled.
    pub fn noiseless(&self) -> PufInstance {
        PufInstance::new(self.seed, self.params.with_noise(0.0)).expect("zero noise is valid")
    }

    /// Single-bit evaluation of a strong PUF.
    pub fn eval_bit(&self, c: &Challenge, noise_seed: u64) -> Result<u8, PufError> {
        match &self.model {
            Model::Sram(_) => Err(PufError::Unsupported("sram")),
            Model::Arbiter(a) => a.eval_bit(c, noise_seed),
            Model::Xor(x) => x.eval_bit(c, noise_seed),
        }
    }

    /// A noisy read `R1` for inner challenge `c0`.
    pub fn eval_raw(&self, c0: &Challenge, noise_seed: u64) -> Result<RawResponse, PufError> {
        self.read(c0, Some(noise_seed))
    }

    /// The noise-free response for `c0`.
    pub fn reference_response(&self, c0: &Challenge) -> Result<RawResponse, PufError> {
        self.read(c0, None)
    }

    fn read(&self, c0: &Challenge, noise_seed: Option<u64>) -> Result<RawResponse, PufError> {
        if c0.width() != INNER_CHALLENGE_BITS {
            return Err(PufError::ChallengeWidth {
                expected: INNER_CHALLENGE_BITS,
                got: c0.width(),
            });
        }
        let n = self.response_bits();
        Ok(match &self.model {
            Model::Sram(s) => {
                let block = s.block_index(c0)?;
                match noise_seed {
                    Some(ns) => s.read_block(block, ns),
                    None => s.reference_block(block),
                }
            }
            Model::Arbiter(a) => a.read(&a.delays_for(c0, n), c0, noise_seed),
            Model::Xor(x) => x.read(c0, n, noise_seed),
        })
    }

    /// A valid inner challenge drawn from `rng`: a block index for SRAM, any
    /// 64-bit value otherwise.
    pub fn random_challenge<R: Rng + ?Sized>(&self, rng: &mut R) -> Challenge {
        let v: u64 = rng.random();
        match &self.params {
            PufParams::Sram { num_blocks, .. } => Challenge::from_u64(v % num_blocks),
            _ => Challenge::from_u64(v),
        }
    }

    pub fn to_document(&self) -> PufDocument {
        PufDocument {
            schema_version: PUF_SCHEMA_VERSION,
            seed: self.seed,
            params: self.params.clone(),
        }
    }

    pub fn from_document(doc: &PufDocument) -> Result<Self, PufError> {
        if doc.schema_version != PUF_SCHEMA_VERSION {
            return Err(PufError::Document(format!(
                "unsupported schema version {}",
                doc.schema_version
            )));
        }
        Self::new(doc.seed, doc.params.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, PufError> {
        let doc: PufDocument = serde_json::from_str(s).map_err(|e| PufError::Document(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Fraction of response bits that match the reference over `trials` reads at
/// random inner challenges.
pub fn measure_reliability(puf: &PufInstance, trials: usize, seed: u64) -> Result<f64, PufError> {
    measure_reliability_with(Backend::default(), puf, trials, seed)
}

pub const MIN_RELIABILITY_TRIALS: usize = 1000;

pub fn measure_reliability_with(
    backend: Backend,
    puf: &PufInstance,
    trials: usize,
    seed: u64,
) -> Result<f64, PufError> {
    if trials < MIN_RELIABILITY_TRIALS {
        return Err(PufError::TooFewTrials {
            min: MIN_RELIABILITY_TRIALS,
            got: trials,
        });
    }
    let matches = backend.map(trials, |t| -> Result<usize, PufError> {
        let mut s = rng::stream(tag::RELIABILITY, &[seed, t as u64]);
        let c0 = puf.random_challenge(&mut s);
        let noise_seed: u64 = s.random();
        let reference = puf.reference_response(&c0)?;
        let read = puf.eval_raw(&c0, noise_seed)?;
        Ok(reference.len() - reference.hamming_distance(&read))
    });
    let total: usize = matches.into_iter().sum::<Result<usize, _>>()?;
    Ok(total as f64 / (trials * puf.response_bits()) as f64)
}

/// Bisection step budget for [`calibrate_sigma`].
const CALIBRATION_STEPS: usize = 40;

/// Finds the noise level `sigma` of a strong PUF (`params` must be an
/// arbiter or XOR kind) at which the measured reliability matches `target`.
///
/// All measurements share `seed`, so the estimate is monotone in `sigma` up to
/// the interaction of XOR chains.
pub fn calibrate_sigma(
    puf_seed: u64,
    params: &PufParams,
    target_reliability: f64,
    trials: usize,
    seed: u64,
) -> Result<f64, PufError> {
    if matches!(params, PufParams::Sram { .. }) {
        return Err(PufError::Unsupported("sram"));
    }
    if !(target_reliability > 0.5 && target_reliability <= 1.0) {
        return Err(PufError::UnreachableTarget(target_reliability));
    }
    if target_reliability == 1.0 {
        return Ok(0.0);
    }
    let measure = |sigma: f64| -> Result<f64, PufError> {
        let puf = PufInstance::new(puf_seed, params.with_noise(sigma))?;
        measure_reliability(&puf, trials, seed)
    };

    let mut lo = 0.0;
    let mut hi = 0.01;
    let mut steps = 0;
    while measure(hi)? > target_reliability {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 40 {
            return Err(PufError::UnreachableTarget(target_reliability));
        }
    }
    let mut best = (f64::INFINITY, hi);
    for _ in 0..CALIBRATION_STEPS {
        let mid = 0.5 * (lo + hi);
        let r = measure(mid)?;
        let err = (r - target_reliability).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if r > target_reliability {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    Ok(best.1)
}
