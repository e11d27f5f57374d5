//! System configuration, the batch benchmark and the fast self-test suite.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::buffer::{sample_with_buffer, LookasideBuffer, SampleContext, DEFAULT_CAPACITY};
use crate::ecc::{CodeSpec, CodeVariant, EccError};
use crate::exec::Backend;
use crate::fuzzy::{self, FuzzyError, HelperData};
use crate::hash::{select_output, HashAlg, HashError, Output, OutputMode, OutputRequest, OUTER_CHALLENGE_BITS};
use crate::puf::{Challenge, PufDocument, PufError, PufInstance, PufParams, PUF_SCHEMA_VERSION};
use crate::rng::{self, tag};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// SRAM flip probability of the default BCH system.
pub const BCH_DEFAULT_FLIP_PROB: f64 = 0.05;
/// SRAM flip probability of the default RS system. Each flipped bit costs a
/// whole symbol, so the 2040-bit block needs a much quieter PUF.
pub const RS_DEFAULT_FLIP_PROB: f64 = 0.002;
pub const DEFAULT_BATCH: usize = 16;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("inconsistent config: {0}")]
    Config(String),
    #[error(transparent)]
    Puf(#[from] PufError),
    #[error(transparent)]
    Ecc(#[from] EccError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Hash(#[from] HashError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub schema_version: u32,
    pub puf: PufDocument,
    pub code: CodeVariant,
    pub buffer_capacity: usize,
    #[serde(default)]
    pub hash: HashAlg,
    pub seed: u64,
}

impl SystemConfig {
    /// SRAM system sized for the default code of `variant`.
    pub fn default_for(variant: CodeVariant, seed: u64) -> Self {
        let (bits, p) = match variant {
            CodeVariant::Bch => (127, BCH_DEFAULT_FLIP_PROB),
            CodeVariant::Rs => (2040, RS_DEFAULT_FLIP_PROB),
        };
        Self::with_params(variant, PufParams::sram(bits, p), seed)
    }

    pub fn with_params(variant: CodeVariant, params: PufParams, seed: u64) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            puf: PufDocument {
                schema_version: PUF_SCHEMA_VERSION,
                seed,
                params,
            },
            code: variant,
            buffer_capacity: DEFAULT_CAPACITY,
            hash: HashAlg::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.buffer_capacity == 0 {
            return Err(HarnessError::Config("buffer capacity must be at least 1".into()));
        }
        self.puf.params.validate()?;
        let n_code = CodeSpec::default_for(self.code).n_bits();
        let width = self.puf.params.response_bits();
        if width != n_code {
            return Err(HarnessError::Config(format!(
                "PUF response width {width} does not match code length {n_code}"
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<System, HarnessError> {
        self.validate()?;
        Ok(System {
            puf: PufInstance::from_document(&self.puf)?,
            code: CodeSpec::default_for(self.code),
            hash: self.hash,
            buffer_capacity: self.buffer_capacity,
            seed: self.seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub puf: PufInstance,
    pub code: CodeSpec,
    pub hash: HashAlg,
    pub buffer_capacity: usize,
    pub seed: u64,
}

impl System {
    pub fn enroll(&self, c0: &Challenge) -> Result<HelperData, HarnessError> {
        let seed = rng::derive_seed(tag::BENCH, &[self.seed, 0, c0.to_u64().unwrap_or(0)]);
        Ok(fuzzy::enroll(&self.puf, c0, &self.code, seed)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub batch_sizes: Vec<usize>,
    pub repeats: usize,
    /// Every sample in a batch uses its own inner challenge (cold cache).
    pub distinct_keys: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            batch_sizes: vec![1, 2, 4, 8, 16, 32],
            repeats: 20,
            distinct_keys: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub batch_size: usize,
    pub unbuffered_us: f64,
    pub buffered_us: f64,
    pub unbuffered_crps_per_ms: f64,
    pub buffered_crps_per_ms: f64,
    pub unbuffered_decode_calls: u64,
    pub buffered_decode_calls: u64,
    pub hits: u64,
    pub misses: u64,
    pub speedup: f64,
    pub unbuffered_failures: usize,
    pub buffered_failures: usize,
    /// Outputs agree wherever both legs reconstructed.
    pub outputs_match: bool,
}

/// Least-squares slopes of batch time against batch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSlopes {
    pub unbuffered_us_per_sample: f64,
    pub buffered_us_per_sample: f64,
    pub decode_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub corrected_crps_per_ms: f64,
    pub hashed_crps_per_ms: f64,
    /// `(hashed / corrected - 1) * 100`.
    pub hashed_vs_corrected_pct: f64,
}

/// Reference timings of the FPGA implementation for the same workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareReference {
    pub batch_size: usize,
    pub unbuffered_us: f64,
    pub buffered_us: f64,
    pub speedup: f64,
    pub hashed_vs_corrected_pct: f64,
}

impl HardwareReference {
    pub fn for_code(variant: CodeVariant) -> Self {
        match variant {
            CodeVariant::Rs => Self {
                batch_size: 16,
                unbuffered_us: 253.13,
                buffered_us: 92.94,
                speedup: 2.72,
                hashed_vs_corrected_pct: -10.66,
            },
            CodeVariant::Bch => Self {
                batch_size: 16,
                unbuffered_us: 21.64,
                buffered_us: 13.24,
                speedup: 1.63,
                hashed_vs_corrected_pct: -1.16,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub code_id: String,
    pub puf_kind: String,
    pub buffer_capacity: usize,
    pub repeats: usize,
    pub distinct_keys: bool,
    pub rows: Vec<BenchRow>,
    pub slopes: Option<BatchSlopes>,
    pub throughput: Throughput,
    pub hardware_reference: HardwareReference,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn row(&self, batch_size: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.batch_size == batch_size)
    }
}

struct Workload {
    c0s: Vec<Challenge>,
    helpers: Vec<HelperData>,
    outers: Vec<BitString>,
    noise: Vec<u64>,
}

impl Workload {
    fn new(sys: &System, batch: usize, distinct: bool) -> Result<Self, HarnessError> {
        let mut s = rng::stream(tag::BENCH, &[sys.seed, 1, batch as u64]);
        let keys = if distinct { batch } else { 1 };
        let c0s: Vec<Challenge> = (0..keys).map(|_| sys.puf.random_challenge(&mut s)).collect();
        let helpers = c0s.iter().map(|c| sys.enroll(c)).collect::<Result<_, _>>()?;
        let outers = (0..batch)
            .map(|_| BitString::from_bools((0..OUTER_CHALLENGE_BITS).map(|_| s.random::<bool>())))
            .collect();
        let noise = (0..batch).map(|_| s.random()).collect();
        Ok(Self {
            c0s,
            helpers,
            outers,
            noise,
        })
    }

    fn request(&self, j: usize, mode: OutputMode) -> OutputRequest<'_> {
        let k = j % self.c0s.len();
        OutputRequest {
            mode,
            c0: &self.c0s[k],
            helper: Some(&self.helpers[k]),
            outer: Some(&self.outers[j]),
            noise_seed: self.noise[j],
        }
    }
}

/// A failed reconstruction is a legitimate outcome and becomes `None`.
fn keep_failures(r: Result<Output, HashError>) -> Result<Option<Output>, HarnessError> {
    match r {
        Ok(o) => Ok(Some(o)),
        Err(HashError::Fuzzy(FuzzyError::ReconstructFailure(_))) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

type Outputs = Vec<Option<Output>>;

fn run_unbuffered(sys: &System, w: &Workload, mode: OutputMode) -> Result<Outputs, HarnessError> {
    (0..w.outers.len())
        .map(|j| keep_failures(select_output(&sys.puf, &sys.code, sys.hash, w.request(j, mode))))
        .collect()
}

fn run_buffered(sys: &System, w: &Workload) -> Result<(Outputs, LookasideBuffer), HarnessError> {
    let mut buf = LookasideBuffer::new(sys.buffer_capacity).map_err(|e| HarnessError::Config(e.to_string()))?;
    let ctx = SampleContext {
        puf_id: 0,
        puf: &sys.puf,
        code: &sys.code,
        hash: sys.hash,
    };
    let out = (0..w.outers.len())
        .map(|j| keep_failures(sample_with_buffer(&mut buf, ctx, w.request(j, OutputMode::Hashed))))
        .collect::<Result<_, _>>()?;
    Ok((out, buf))
}

/// Mean wall time of `f` over `repeats` runs after one warm-up, in
/// microseconds.
fn time_us<T>(repeats: usize, mut f: impl FnMut() -> Result<T, HarnessError>) -> Result<(f64, T), HarnessError> {
    let mut last = Some(f()?);
    let start = Instant::now();
    for _ in 0..repeats {
        last = Some(f()?);
    }
    let us = start.elapsed().as_secs_f64() * 1e6 / repeats as f64;
    Ok((us, last.expect("repeats >= 1")))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs each batch size unbuffered and then buffered (fresh buffer per
/// batch) on the same thread. Counters are exact; times are not.
pub fn bench_batch(cfg: &SystemConfig, opts: &BenchOptions) -> Result<BenchReport, HarnessError> {
    if opts.batch_sizes.is_empty() || opts.batch_sizes.contains(&0) {
        return Err(HarnessError::Config("batch sizes must be at least 1".into()));
    }
    if opts.repeats == 0 {
        return Err(HarnessError::Config("repeats must be at least 1".into()));
    }
    let sys = cfg.build()?;
    let mut rows = Vec::new();
    for &batch in &opts.batch_sizes {
        let w = Workload::new(&sys, batch, opts.distinct_keys)?;
        let (unbuffered_us, plain) = time_us(opts.repeats, || run_unbuffered(&sys, &w, OutputMode::Hashed))?;
        let (buffered_us, (cached, buf)) = time_us(opts.repeats, || run_buffered(&sys, &w))?;
        let c = buf.counters();
        rows.push(BenchRow {
            batch_size: batch,
            unbuffered_us,
            buffered_us,
            unbuffered_crps_per_ms: batch as f64 * 1e3 / unbuffered_us,
            buffered_crps_per_ms: batch as f64 * 1e3 / buffered_us,
            unbuffered_decode_calls: batch as u64,
            buffered_decode_calls: c.decode_calls,
            hits: c.hits,
            misses: c.misses,
            speedup: unbuffered_us / buffered_us,
            unbuffered_failures: plain.iter().filter(|o| o.is_none()).count(),
            buffered_failures: cached.iter().filter(|o| o.is_none()).count(),
            outputs_match: plain.iter().zip(&cached).all(|(a, b)| a.is_none() || b.is_none() || a == b),
        });
    }

    // single-sample cost of each output mode
    let w = Workload::new(&sys, DEFAULT_BATCH, true)?;
    let (corrected_us, _) = time_us(opts.repeats, || run_unbuffered(&sys, &w, OutputMode::Corrected))?;
    let (hashed_us, _) = time_us(opts.repeats, || run_unbuffered(&sys, &w, OutputMode::Hashed))?;
    let corrected = DEFAULT_BATCH as f64 * 1e3 / corrected_us;
    let hashed = DEFAULT_BATCH as f64 * 1e3 / hashed_us;

    let slopes = (rows.len() >= 2).then(|| {
        let xs: Vec<f64> = rows.iter().map(|r| r.batch_size as f64).collect();
        let u: Vec<f64> = rows.iter().map(|r| r.unbuffered_us).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.buffered_us).collect();
        BatchSlopes {
            unbuffered_us_per_sample: slope(&xs, &u),
            buffered_us_per_sample: slope(&xs, &b),
            decode_us: corrected_us / DEFAULT_BATCH as f64,
        }
    });

    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        code_id: sys.code.code_id(),
        puf_kind: sys.puf.kind().to_string(),
        buffer_capacity: sys.buffer_capacity,
        repeats: opts.repeats,
        distinct_keys: opts.distinct_keys,
        rows,
        slopes,
        throughput: Throughput {
            corrected_crps_per_ms: corrected,
            hashed_crps_per_ms: hashed,
            hashed_vs_corrected_pct: (hashed / corrected - 1.0) * 100.0,
        },
        hardware_reference: HardwareReference::for_code(cfg.code),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flip the first message bit of every decode the suite performs.
    CorruptDecode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

struct Suite {
    fault: Fault,
    seed: u64,
}

impl Suite {
    fn decode(&self, code: &CodeSpec, word: &BitString) -> Result<BitString, EccError> {
        let mut m = code.decode(word)?;
        if self.fault == Fault::CorruptDecode {
            m.flip(0);
        }
        Ok(m)
    }

    fn ecc_t_errors(&self, code: &CodeSpec) -> bool {
        let mut s = rng::stream("selftest/ecc", &[self.seed, code.n_bits() as u64]);
        (0..20).all(|_| {
            let msg = BitString::from_bools((0..code.k_bits()).map(|_| s.random::<bool>()));
            let mut word = code.encode(&msg).expect("k bits");
            match code {
                CodeSpec::Bch(_) => {
                    for i in rand::seq::index::sample(&mut s, code.n_bits(), code.t()) {
                        word.flip(i);
                    }
                }
                CodeSpec::Rs(_) => {
                    for sym in rand::seq::index::sample(&mut s, code.n_bits() / 8, code.t()) {
                        word.flip(sym * 8 + s.random_range(0..8));
                    }
                }
            }
            self.decode(code, &word).ok() == Some(msg)
        })
    }

    fn fuzzy_round_trip(&self) -> bool {
        let code = CodeSpec::bch_default();
        let Ok(puf) = PufInstance::new(self.seed, PufParams::sram(127, 0.02)) else {
            return false;
        };
        (0..20u64).all(|i| {
            let c0 = Challenge::from_u64(i);
            let Ok((helper, r2)) = fuzzy::enroll(&puf, &c0, &code, i) else {
                return false;
            };
            let Ok(read) = puf.eval_raw(&c0, 1000 + i) else {
                return false;
            };
            let Ok(m) = self.decode(&code, &(helper.aux() ^ &read)) else {
                return false;
            };
            let rebuilt = &code.encode(&m).expect("k bits") ^ helper.aux();
            let lib = fuzzy::reconstruct_from_read(&code, &helper, &read);
            rebuilt == r2 && lib.as_ref() == Ok(&r2)
        })
    }

    fn hash_vector(&self) -> bool {
        HashAlg::Sha3_256.digest(b"abc").to_vec()
            == hex::decode("3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532").unwrap()
    }

    fn hash_width_rejection(&self) -> bool {
        let r2 = BitString::zeros(127);
        [0usize, 64, 127, 129, 256].iter().all(|&w| {
            crate::hash::compose_response(HashAlg::Sha3_256, 127, &r2, &BitString::zeros(w)).is_err()
        }) && crate::hash::compose_response(HashAlg::Sha3_256, 127, &r2, &BitString::zeros(128)).is_ok()
    }

    fn buffer_batch(&self) -> bool {
        let cfg = SystemConfig::with_params(CodeVariant::Bch, PufParams::sram(127, 0.02), self.seed);
        let Ok(sys) = cfg.build() else { return false };
        let Ok(w) = Workload::new(&sys, 16, false) else {
            return false;
        };
        match (run_unbuffered(&sys, &w, OutputMode::Hashed), run_buffered(&sys, &w)) {
            (Ok(plain), Ok((cached, buf))) => {
                let c = buf.counters();
                plain == cached && c.decode_calls == 1 && c.hits == 15 && c.misses == 1
            }
            _ => false,
        }
    }

    fn isa_vectors(&self) -> bool {
        use crate::isa::decode::{decode, Instr};
        decode(0x0002_952B).ok() == Some(Instr::InnerPufInit { rs1: 5, rd: 10 })
            && decode(0x0062_A52B).ok() == Some(Instr::OuterPufChal { rs1: 5, rs2: 6, rd: 10 })
    }

    fn backends_agree(&self) -> bool {
        let f = |i: usize| rng::derive_seed("selftest/backend", &[self.seed, i as u64]);
        Backend::Sequential.map(1000, f) == Backend::Parallel.map(1000, f)
    }

    fn rng_determinism(&self) -> bool {
        let mut a = rng::stream("selftest/rng", &[self.seed]);
        let mut b = rng::stream("selftest/rng", &[self.seed]);
        let mut c = rng::stream("selftest/rng", &[self.seed + 1]);
        let xa: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.random()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.random()).collect();
        xa == xb && xa != xc
    }
}

/// Fast invariant suite; `fault` corrupts the decoder the suite uses.
pub fn selftest(fault: Fault, seed: u64) -> SelftestReport {
    let suite = Suite { fault, seed };
    let checks: Vec<(&str, Box<dyn Fn(&Suite) -> bool>)> = vec![
        ("rng_determinism", Box::new(Suite::rng_determinism)),
        ("backends_agree", Box::new(Suite::backends_agree)),
        ("ecc_bch_corrects_t", Box::new(|s: &Suite| s.ecc_t_errors(&CodeSpec::bch_default()))),
        ("ecc_rs_corrects_t", Box::new(|s: &Suite| s.ecc_t_errors(&CodeSpec::rs_default()))),
        ("fuzzy_round_trip", Box::new(Suite::fuzzy_round_trip)),
        ("hash_sha3_vector", Box::new(Suite::hash_vector)),
        ("hash_width_rejection", Box::new(Suite::hash_width_rejection)),
        ("buffer_batch_single_decode", Box::new(Suite::buffer_batch)),
        ("isa_custom_vectors", Box::new(Suite::isa_vectors)),
    ];
    SelftestReport {
        checks: checks
            .into_iter()
            .map(|(name, f)| CheckResult {
                name: name.to_string(),
                pass: f(&suite),
            })
            .collect(),
    }
}
