//! Modeling attack: logistic regression on challenge–response pairs.
//!
//! Raw mode collects noiseless `(c, bit)` pairs from an arbiter chain and
//! trains on the parity features `phi(c)`, under which the arbiter response is
//! a linear threshold function. Hashed mode fixes one enrolled inner state and
//! collects `(C, bit 0 of R3)` over random outer challenges; features are the
//! challenge bits mapped to `+/-1` plus a constant bias term.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::ecc::CodeSpec;
use crate::exec::Backend;
use crate::fuzzy::{self, FuzzyError, StableResponse};
use crate::hash::{compose_response, HashAlg, OUTER_CHALLENGE_BITS};
use crate::puf::{parity_features_unchecked, ArbiterPuf, Challenge, PufInstance};
use crate::rng::{self, tag};

pub const MIN_CRPS: usize = 100;
pub const MIN_TRAIN_RECORDS: usize = 200;
pub const DEFAULT_EPOCHS: usize = 400;
pub const DEFAULT_LEARNING_RATE: f64 = 2.0;
const CHUNK: usize = 512;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("need at least {min} CRPs, got {got}")]
    TooFewCrps { min: usize, got: usize },
    #[error("degenerate dataset: {0}")]
    Degenerate(String),
    #[error("feature width {got} does not match model width {expected}")]
    Width { expected: usize, got: usize },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("dataset I/O: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrpMode {
    RawArbiter,
    HashedBit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpRecord {
    pub challenge: BitString,
    pub response_bit: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpDataset {
    pub mode: CrpMode,
    pub width: usize,
    pub records: Vec<CrpRecord>,
}

/// One enrolled inner state whose hashed output bit is attacked.
#[derive(Debug, Clone)]
pub struct HashedTarget {
    pub r2: StableResponse,
    pub n_code: usize,
    pub hash: HashAlg,
}

impl HashedTarget {
    /// Enrolls `(puf, c0)` and reconstructs once to fix `R2`.
    pub fn enroll(
        puf: &PufInstance,
        code: &CodeSpec,
        hash: HashAlg,
        c0: &Challenge,
        seed: u64,
    ) -> Result<Self, AttackError> {
        let (helper, _) = fuzzy::enroll(puf, c0, code, seed)?;
        let r2 = fuzzy::reconstruct(puf, c0, &helper, code, seed)?;
        Ok(Self {
            r2,
            n_code: code.n_bits(),
            hash,
        })
    }

    pub fn response_bit(&self, outer: &BitString) -> u8 {
        compose_response(self.hash, self.n_code, &self.r2, outer)
            .expect("target widths fixed at construction")
            .bit(0)
    }
}

fn random_bits<R: Rng>(rng: &mut R, n: usize) -> BitString {
    BitString::from_bools((0..n).map(|_| rng.random::<bool>()))
}

/// Noiseless CRPs of one arbiter chain at uniformly random challenges.
pub fn generate_raw_crps(
    backend: Backend,
    puf: &ArbiterPuf,
    count: usize,
    seed: u64,
) -> Result<CrpDataset, AttackError> {
    if count < MIN_CRPS {
        return Err(AttackError::TooFewCrps { min: MIN_CRPS, got: count });
    }
    let width = puf.stages();
    let records = backend.map(count, |i| {
        let mut s = rng::stream(tag::CRP_RAW, &[seed, i as u64]);
        let bits = random_bits(&mut s, width);
        let c = Challenge::new(bits.clone()).expect("nonempty");
        CrpRecord {
            challenge: bits,
            response_bit: puf.eval_noiseless(&c).expect("width matches"),
        }
    });
    Ok(CrpDataset {
        mode: CrpMode::RawArbiter,
        width,
        records,
    })
}

/// `(C, bit 0 of R3)` pairs at uniformly random 128-bit outer challenges.
pub fn generate_hashed_crps(
    backend: Backend,
    target: &HashedTarget,
    count: usize,
    seed: u64,
) -> Result<CrpDataset, AttackError> {
    if count < MIN_CRPS {
        return Err(AttackError::TooFewCrps { min: MIN_CRPS, got: count });
    }
    let records = backend.map(count, |i| {
        let mut s = rng::stream(tag::CRP_HASHED, &[seed, i as u64]);
        let outer = random_bits(&mut s, OUTER_CHALLENGE_BITS);
        CrpRecord {
            response_bit: target.response_bit(&outer),
            challenge: outer,
        }
    });
    Ok(CrpDataset {
        mode: CrpMode::HashedBit,
        width: OUTER_CHALLENGE_BITS,
        records,
    })
}

impl CrpDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.width + 1
    }

    pub fn ones_fraction(&self) -> f64 {
        self.records.iter().filter(|r| r.response_bit == 1).count() as f64 / self.len() as f64
    }

    /// Splits off the first `n` records as a training set.
    pub fn split_at(&self, n: usize) -> (CrpDataset, CrpDataset) {
        let (a, b) = self.records.split_at(n.min(self.len()));
        let part = |r: &[CrpRecord]| CrpDataset {
            mode: self.mode,
            width: self.width,
            records: r.to_vec(),
        };
        (part(a), part(b))
    }

    /// Row-major feature matrix and labels.
    pub fn features(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(self.len() * self.feature_width());
        let mut y = Vec::with_capacity(self.len());
        for r in &self.records {
            x.extend(features_of(self.mode, &r.challenge));
            y.push(r.response_bit as f64);
        }
        (x, y)
    }

    /// CSV with header `challenge_hex,response_bit`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AttackError> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| AttackError::Io(e.to_string());
        wtr.write_record(["challenge_hex", "response_bit"]).map_err(io)?;
        for r in &self.records {
            wtr.write_record([r.challenge.to_hex(), r.response_bit.to_string()])
                .map_err(io)?;
        }
        wtr.flush().map_err(|e| AttackError::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(mode: CrpMode, width: usize, r: R) -> Result<Self, AttackError> {
        let mut rdr = csv::Reader::from_reader(r);
        let io = |e: String| AttackError::Io(e);
        let headers = rdr.headers().map_err(|e| io(e.to_string()))?;
        if headers != vec!["challenge_hex", "response_bit"] {
            return Err(io(format!("unexpected header {headers:?}")));
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| io(e.to_string()))?;
            let challenge = BitString::from_hex(&row[0], width).map_err(|e| io(e.to_string()))?;
            let response_bit = match &row[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(io(format!("bad response bit `{other}`"))),
            };
            records.push(CrpRecord { challenge, response_bit });
        }
        Ok(Self { mode, width, records })
    }
}

fn features_of(mode: CrpMode, challenge: &BitString) -> Vec<f64> {
    match mode {
        CrpMode::RawArbiter => parity_features_unchecked(challenge.as_slice()),
        CrpMode::HashedBit => challenge
            .iter()
            .map(|b| if b == 1 { -1.0 } else { 1.0 })
            .chain(std::iter::once(1.0))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub mode: CrpMode,
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, challenge: &BitString) -> Result<u8, AttackError> {
        let x = features_of(self.mode, challenge);
        if x.len() != self.weights.len() {
            return Err(AttackError::Width {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok((dot(&self.weights, &x) > 0.0) as u8)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable `log(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss and its gradient over row-major features `x`.
///
/// Rows are reduced in fixed chunks of 512, so the result is bit-identical on
/// both backends.
pub fn loss_and_gradient(backend: Backend, weights: &[f64], x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let d = weights.len();
    let n = y.len();
    assert_eq!(x.len(), n * d);
    let rows: Vec<usize> = (0..n).collect();
    let partials = backend.map_chunks(&rows, CHUNK, |chunk| {
        let mut loss = 0.0;
        let mut grad = vec![0.0; d];
        for &i in chunk {
            let row = &x[i * d..(i + 1) * d];
            let z = dot(weights, row);
            loss += softplus(z) - y[i] * z;
            let r = sigmoid(z) - y[i];
            for (g, xi) in grad.iter_mut().zip(row) {
                *g += r * xi;
            }
        }
        (loss, grad)
    });
    let mut loss = 0.0;
    let mut grad = vec![0.0; d];
    for (l, g) in partials {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    (loss * inv, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(skip, default)]
    pub backend: Backend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            backend: Backend::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub model: LinearModel,
    /// Loss before each epoch, followed by the final loss.
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent on the mean logistic loss.
pub fn train_logreg(data: &CrpDataset, cfg: &TrainConfig) -> Result<Training, AttackError> {
    if data.len() < MIN_TRAIN_RECORDS {
        return Err(AttackError::TooFewCrps {
            min: MIN_TRAIN_RECORDS,
            got: data.len(),
        });
    }
    let ones = data.records.iter().filter(|r| r.response_bit == 1).count();
    if ones == 0 || ones == data.len() {
        return Err(AttackError::Degenerate("all labels identical".into()));
    }
    let (x, y) = data.features();
    let d = data.feature_width();
    let mut s = rng::stream(tag::LOGREG_INIT, &[cfg.seed]);
    let mut w: Vec<f64> = (0..d).map(|_| 0.01 * s.sample::<f64, _>(StandardNormal)).collect();
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient(cfg.backend, &w, &x, &y);
        losses.push(loss);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= cfg.learning_rate * gi;
        }
    }
    losses.push(loss_and_gradient(cfg.backend, &w, &x, &y).0);
    Ok(Training {
        model: LinearModel {
            mode: data.mode,
            weights: w,
        },
        losses,
    })
}

/// Fraction of records whose bit the model predicts correctly.
pub fn evaluate(model: &LinearModel, data: &CrpDataset) -> Result<f64, AttackError> {
    if data.feature_width() != model.weights.len() {
        return Err(AttackError::Width {
            expected: model.weights.len(),
            got: data.feature_width(),
        });
    }
    if data.is_empty() {
        return Err(AttackError::Degenerate("empty dataset".into()));
    }
    let mut correct = 0usize;
    for r in &data.records {
        if model.predict(&r.challenge)? == r.response_bit {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: CrpMode,
    pub train_size: usize,
    pub test_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub final_loss: f64,
}

/// Trains on the first `train_size` records and tests on the rest.
pub fn run_attack(data: &CrpDataset, train_size: usize, cfg: &TrainConfig) -> Result<TrainReport, AttackError> {
    let (train, test) = data.split_at(train_size);
    let training = train_logreg(&train, cfg)?;
    Ok(TrainReport {
        mode: data.mode,
        train_size: train.len(),
        test_size: test.len(),
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        train_accuracy: evaluate(&training.model, &train)?,
        test_accuracy: evaluate(&training.model, &test)?,
        final_loss: *training.losses.last().expect("final loss"),
    })
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub schema_version: u32,
    pub raw: TrainReport,
    pub hashed: TrainReport,
    /// `raw.test_accuracy - hashed.test_accuracy`.
    pub gap: f64,
}

impl AttackSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Datasets of `count` records for both modes: a noiseless 64-stage arbiter
/// chain, and the hashed bit of an SRAM/BCH system, both seeded from `seed`.
pub fn attack_datasets(backend: Backend, seed: u64, count: usize) -> Result<(CrpDataset, CrpDataset), AttackError> {
    let arbiter = ArbiterPuf::new(seed, crate::puf::DEFAULT_STAGES, 0.0).map_err(FuzzyError::from)?;
    let raw = generate_raw_crps(backend, &arbiter, count, seed)?;
    let sram = PufInstance::new(seed, crate::puf::PufParams::sram(127, 0.05)).map_err(FuzzyError::from)?;
    let c0 = Challenge::from_u64(seed % 1024);
    let target = HashedTarget::enroll(&sram, &CodeSpec::bch_default(), HashAlg::default(), &c0, seed)?;
    let hashed = generate_hashed_crps(backend, &target, count, seed)?;
    Ok((raw, hashed))
}

/// Trains on `train` records and tests on `test` more, in both modes.
pub fn attack_suite(seed: u64, train: usize, test: usize, cfg: &TrainConfig) -> Result<AttackSummary, AttackError> {
    let (raw, hashed) = attack_datasets(cfg.backend, seed, train + test)?;
    let raw = run_attack(&raw, train, cfg)?;
    let hashed = run_attack(&hashed, train, cfg)?;
    Ok(AttackSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        gap: raw.test_accuracy - hashed.test_accuracy,
        raw,
        hashed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CrpDataset {
        // label = first bit; separable through the +/-1 encoding
        let records = (0..256u64)
            .map(|v| {
                let bits = BitString::from_u64(v % 4, 2);
                CrpRecord {
                    response_bit: bits.get(0),
                    challenge: bits,
                }
            })
            .collect();
        CrpDataset {
            mode: CrpMode::HashedBit,
            width: 2,
            records,
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = toy();
        let t = train_logreg(&data, &TrainConfig::default()).unwrap();
        assert_eq!(evaluate(&t.model, &data).unwrap(), 1.0);
        assert!(t.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn finite_difference_gradient() {
        let mut s = rng::stream("test/fd", &[1]);
        for trial in 0..5 {
            let n = 30 + trial;
            let d = 6;
            let x: Vec<f64> = (0..n * d).map(|_| s.sample(StandardNormal)).collect();
            let y: Vec<f64> = (0..n).map(|_| s.random_range(0..2) as f64).collect();
            let w: Vec<f64> = (0..d).map(|_| s.sample(StandardNormal)).collect();
            let (_, grad) = loss_and_gradient(Backend::Sequential, &w, &x, &y);
            let h = 1e-6;
            for j in 0..d {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (loss_and_gradient(Backend::Sequential, &wp, &x, &y).0
                    - loss_and_gradient(Backend::Sequential, &wm, &x, &y).0)
                    / (2.0 * h);
                let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-8);
                assert!(rel < 1e-5, "coord {j}: fd {fd} analytic {}", grad[j]);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let mut data = toy();
        data.records.truncate(150);
        assert!(matches!(
            train_logreg(&data, &TrainConfig::default()),
            Err(AttackError::TooFewCrps { .. })
        ));
        let mut same = toy();
        same.records.iter_mut().for_each(|r| r.response_bit = 1);
        assert!(matches!(
            train_logreg(&same, &TrainConfig::default()),
            Err(AttackError::Degenerate(_))
        ));
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let puf = ArbiterPuf::new(5, 64, 0.0).unwrap();
        let data = generate_raw_crps(Backend::default(), &puf, 2000, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let t = train_logreg(&data, &cfg).unwrap();
        assert_eq!(t.losses.len(), 1);
        let acc = evaluate(&t.model, &data).unwrap();
        assert!((0.4..=0.6).contains(&acc), "{acc}");
    }

    #[test]
    fn raw_crps_deterministic_and_balanced() {
        let puf = ArbiterPuf::new(8, 64, 0.0).unwrap();
        let a = generate_raw_crps(Backend::Sequential, &puf, 1000, 3).unwrap();
        let b = generate_raw_crps(Backend::Parallel, &puf, 1000, 3).unwrap();
        assert_eq!(a, b);
        // balance over random weight draws
        let frac: f64 = (0..20)
            .map(|k| {
                let p = ArbiterPuf::new(100 + k, 64, 0.0).unwrap();
                generate_raw_crps(Backend::default(), &p, 500, k).unwrap().ones_fraction()
            })
            .sum::<f64>()
            / 20.0;
        assert!((0.45..=0.55).contains(&frac), "{frac}");
        assert!(generate_raw_crps(Backend::default(), &puf, 99, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let puf = ArbiterPuf::new(8, 64, 0.0).unwrap();
        let data = generate_raw_crps(Backend::default(), &puf, 100, 3).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"challenge_hex,response_bit\n"));
        let back = CrpDataset::read_csv(CrpMode::RawArbiter, 64, buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn width_mismatch_on_evaluate() {
        let model = LinearModel {
            mode: CrpMode::HashedBit,
            weights: vec![0.0; 3],
        };
        let data = CrpDataset {
            mode: CrpMode::HashedBit,
            width: 4,
            records: vec![],
        };
        assert!(matches!(evaluate(&model, &data), Err(AttackError::Width { .. })));
    }
}
