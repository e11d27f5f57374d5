use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use risecure::attack::{self, TrainConfig};
use risecure::bits::BitString;
use risecure::ecc::CodeVariant;
use risecure::fuzzy::{self, HelperData};
use risecure::harness::{self, BenchOptions, Fault, SystemConfig};
use risecure::hash::{select_output, OutputMode, OutputRequest, OUTER_CHALLENGE_BITS};
use risecure::isa::{Machine, Program, PufDevice, RunStatus};
use risecure::puf::{Challenge, PufParams, DEFAULT_STAGES, DEFAULT_XOR_CHAINS};
use risecure::rng;
use risecure::{Backend, HashAlg};
use serde_json::json;

const ENROLL_TAG: &str = "cli/enroll";
const SAMPLE_TAG: &str = "cli/sample";

#[derive(Parser)]
#[command(name = "risecure", version, about = "PUF security-extension simulator")]
struct Cli {
    /// Global seed; falls back to RISECURE_SEED, then 0.
    #[arg(long, global = true, env = "RISECURE_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create PUF systems.
    Puf {
        #[command(subcommand)]
        cmd: PufCmd,
    },
    /// Enroll an inner challenge and write helper data.
    Enroll(EnrollArgs),
    /// Read one output in the selected mode and print it as hex.
    Sample(SampleArgs),
    /// Batch benchmark with and without the lookaside buffer.
    Bench(BenchArgs),
    /// Logistic-regression attack on raw and hashed CRPs.
    Attack(AttackArgs),
    /// Fast invariant suite.
    Selftest(SelftestArgs),
    /// Run an RV32I program against a PUF device.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum PufCmd {
    /// Write a new system JSON.
    New(PufNewArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sram,
    Arbiter,
    Xor,
}

#[derive(Clone, Copy, ValueEnum)]
enum Code {
    Bch,
    Rs,
}

impl From<Code> for CodeVariant {
    fn from(c: Code) -> Self {
        match c {
            Code::Bch => CodeVariant::Bch,
            Code::Rs => CodeVariant::Rs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Hash {
    Sha3,
    Sha2,
}

impl From<Hash> for HashAlg {
    fn from(h: Hash) -> Self {
        match h {
            Hash::Sha3 => HashAlg::Sha3_256,
            Hash::Sha2 => HashAlg::Sha2_256,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Raw,
    Corrected,
    Hashed,
}

impl From<Mode> for OutputMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Raw => OutputMode::Raw,
            Mode::Corrected => OutputMode::Corrected,
            Mode::Hashed => OutputMode::Hashed,
        }
    }
}

#[derive(Args)]
struct PufNewArgs {
    #[arg(long, value_enum, default_value = "sram")]
    kind: Kind,
    #[arg(long, value_enum, default_value = "bch")]
    code: Code,
    #[arg(long, value_enum, default_value = "sha3")]
    hash: Hash,
    /// SRAM per-read flip probability (default depends on the code).
    #[arg(long)]
    flip_prob: Option<f64>,
    /// Arbiter/XOR noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_STAGES)]
    stages: usize,
    #[arg(long, default_value_t = DEFAULT_XOR_CHAINS)]
    chains: usize,
    #[arg(long, default_value_t = risecure::buffer::DEFAULT_CAPACITY)]
    capacity: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EnrollArgs {
    #[arg(long)]
    system: PathBuf,
    /// Inner challenge, decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_u64)]
    c0: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_parser = parse_u64)]
    c0: u64,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Helper JSON (corrected and hashed modes).
    #[arg(long)]
    helper: Option<PathBuf>,
    /// 128-bit outer challenge as 32 hex digits (hashed mode).
    #[arg(long)]
    outer: Option<String>,
    /// Read index; each index is an independent noisy read.
    #[arg(long, default_value_t = 0)]
    read: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// System JSON; defaults to the SRAM system for `--code`.
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rs")]
    code: Code,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16, 32])]
    batch: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Give every sample its own inner challenge.
    #[arg(long)]
    distinct_keys: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, default_value_t = 10_000)]
    train: usize,
    #[arg(long, default_value_t = 2_000)]
    test: usize,
    #[arg(long, default_value_t = attack::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = attack::DEFAULT_LEARNING_RATE)]
    lr: f64,
    /// Also write `raw.csv` and `hashed.csv` CRP files here.
    #[arg(long)]
    crp_dir: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Corrupt every decode the suite performs.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Program image: `.hex` text or a flat little-endian binary.
    program: PathBuf,
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_parser = parse_u32, default_value = "0")]
    entry: u32,
    #[arg(long, default_value_t = risecure::isa::machine::DEFAULT_MEMORY_BYTES)]
    mem_size: usize,
    /// Device index the system PUF is registered under.
    #[arg(long, default_value_t = 0)]
    puf_index: u32,
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: u64,
    /// Memory window `addr:len` to include in the dump (repeatable).
    #[arg(long, value_parser = parse_window)]
    window: Vec<(u32, usize)>,
    /// Disable prefilling the buffer on `inner_puf_init`.
    #[arg(long)]
    no_prefill: bool,
    /// Write the aux table as JSON.
    #[arg(long)]
    aux_out: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("`{s}`: {e}"))
}

fn parse_u32(s: &str) -> Result<u32, String> {
    let v = parse_u64(s)?;
    u32::try_from(v).map_err(|_| format!("`{s}` does not fit in 32 bits"))
}

fn parse_window(s: &str) -> Result<(u32, usize), String> {
    let (a, l) = s.split_once(':').ok_or("expected addr:len")?;
    Ok((parse_u32(a)?, parse_u64(l)? as usize))
}

enum Fail {
    Usage(String),
    Domain(String),
}

impl<E: std::error::Error> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Domain(e.to_string())
    }
}

type Res<T = ()> = Result<T, Fail>;

fn read_file(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Fail::Domain(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Res {
    fs::write(path, format!("{text}\n")).map_err(|e| Fail::Domain(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Res {
    match output {
        Some(p) => write_file(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_system(path: &Path) -> Res<SystemConfig> {
    Ok(SystemConfig::from_json(&read_file(path)?)?)
}

fn puf_new(seed: u64, a: PufNewArgs) -> Res {
    let variant = CodeVariant::from(a.code);
    let n = risecure::CodeSpec::default_for(variant).n_bits();
    let params = match a.kind {
        Kind::Sram => {
            let p = a.flip_prob.unwrap_or(match variant {
                CodeVariant::Bch => harness::BCH_DEFAULT_FLIP_PROB,
                CodeVariant::Rs => harness::RS_DEFAULT_FLIP_PROB,
            });
            PufParams::sram(n, p)
        }
        Kind::Arbiter => PufParams::Arbiter {
            stages: a.stages,
            noise_sigma: a.sigma,
            response_bits: n,
        },
        Kind::Xor => PufParams::Xor {
            stages: a.stages,
            chains: a.chains,
            noise_sigma: a.sigma,
            response_bits: n,
        },
    };
    let mut cfg = SystemConfig::with_params(variant, params, seed);
    cfg.buffer_capacity = a.capacity;
    cfg.hash = a.hash.into();
    cfg.validate()?;
    write_file(&a.output, &cfg.to_json())
}

fn enroll(seed: u64, a: EnrollArgs) -> Res {
    let sys = load_system(&a.system)?.build()?;
    let c0 = Challenge::from_u64(a.c0);
    let (helper, _) = fuzzy::enroll(&sys.puf, &c0, &sys.code, rng::derive_seed(ENROLL_TAG, &[seed, a.c0]))?;
    write_file(&a.output, &helper.to_json())
}

fn sample(seed: u64, a: SampleArgs) -> Res {
    let sys = load_system(&a.system)?.build()?;
    let mode = OutputMode::from(a.mode);
    let helper = match (&a.helper, mode) {
        (Some(p), _) => Some(HelperData::from_json(&read_file(p)?)?),
        (None, OutputMode::Raw) => None,
        (None, _) => return Err(Fail::Usage(format!("--mode {mode} needs --helper"))),
    };
    let outer = match (&a.outer, mode) {
        (Some(h), OutputMode::Hashed) => Some(BitString::from_hex(h, OUTER_CHALLENGE_BITS)?),
        (Some(_), _) => return Err(Fail::Usage("--outer only applies to --mode hashed".into())),
        (None, OutputMode::Hashed) => return Err(Fail::Usage("--mode hashed needs --outer".into())),
        (None, _) => None,
    };
    let c0 = Challenge::from_u64(a.c0);
    let req = OutputRequest {
        mode,
        c0: &c0,
        helper: helper.as_ref(),
        outer: outer.as_ref(),
        noise_seed: rng::derive_seed(SAMPLE_TAG, &[seed, a.c0, a.read]),
    };
    println!("{}", select_output(&sys.puf, &sys.code, sys.hash, req)?.to_hex());
    Ok(())
}

fn bench(seed: u64, a: BenchArgs) -> Res {
    let cfg = match &a.system {
        Some(p) => load_system(p)?,
        None => SystemConfig::default_for(a.code.into(), seed),
    };
    if a.batch.contains(&0) || a.repeats == 0 {
        return Err(Fail::Usage("batch sizes and repeats must be at least 1".into()));
    }
    let opts = BenchOptions {
        batch_sizes: a.batch,
        repeats: a.repeats,
        distinct_keys: a.distinct_keys,
    };
    let report = harness::bench_batch(&cfg, &opts)?;
    emit(a.output.as_deref(), &report.to_json())
}

fn attack_cmd(seed: u64, a: AttackArgs) -> Res {
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        seed,
        backend: if a.sequential {
            Backend::Sequential
        } else {
            Backend::default()
        },
    };
    if let Some(dir) = &a.crp_dir {
        let (raw, hashed) = attack::attack_datasets(cfg.backend, seed, a.train + a.test)?;
        fs::create_dir_all(dir)?;
        raw.write_csv(fs::File::create(dir.join("raw.csv"))?)?;
        hashed.write_csv(fs::File::create(dir.join("hashed.csv"))?)?;
    }
    let summary = attack::attack_suite(seed, a.train, a.test, &cfg)?;
    emit(a.output.as_deref(), &summary.to_json())
}

fn selftest(seed: u64, a: SelftestArgs) -> Res {
    let fault = if a.inject_fault { Fault::CorruptDecode } else { Fault::None };
    let report = harness::selftest(fault, seed);
    for c in &report.checks {
        println!("{} {}", if c.pass { "ok  " } else { "FAIL" }, c.name);
    }
    if report.pass() {
        Ok(())
    } else {
        Err(Fail::Domain(format!("failing properties: {}", report.failures().join(", "))))
    }
}

fn run(seed: u64, a: RunArgs) -> Res {
    let sys = load_system(&a.system)?.build()?;
    let mut device = PufDevice::new(sys.code.clone(), sys.hash, sys.buffer_capacity, seed)?;
    device.set_prefill_on_init(!a.no_prefill);
    device.register(a.puf_index, sys.puf.clone());
    let program = if a.program.extension().is_some_and(|e| e == "hex") {
        Program::parse_hex(&read_file(&a.program)?)?
    } else {
        let bytes = fs::read(&a.program).map_err(|e| Fail::Domain(format!("{}: {e}", a.program.display())))?;
        Program::from_binary(a.entry, &bytes)?
    };
    let mut m = Machine::new(a.mem_size, device);
    m.load_program(&program)?;
    m.set_pc(a.entry);
    let result = m.run(a.max_steps);
    let dump = m.dump(&result, &a.window);
    emit(a.output.as_deref(), &serde_json::to_string_pretty(&dump)?)?;
    if let Some(p) = &a.aux_out {
        let entries: Vec<_> = m
            .device()
            .aux_table()
            .iter()
            .map(|(idx, rec)| {
                json!({
                    "idx": idx,
                    "c0": rec.c0.to_u64(),
                    "helper": serde_json::from_str::<serde_json::Value>(&rec.helper.to_json()).expect("helper JSON"),
                })
            })
            .collect();
        let doc = json!({ "schema_version": 1, "entries": entries });
        write_file(p, &serde_json::to_string_pretty(&doc)?)?;
    }
    match result.status {
        RunStatus::Halted => Ok(()),
        RunStatus::Trapped => Err(Fail::Domain(format!("trapped: {:?}", result.trap.expect("trap")))),
        RunStatus::StepLimit => Err(Fail::Domain(format!("step limit {} reached", a.max_steps))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let res = match cli.cmd {
        Cmd::Puf { cmd: PufCmd::New(a) } => puf_new(seed, a),
        Cmd::Enroll(a) => enroll(seed, a),
        Cmd::Sample(a) => sample(seed, a),
        Cmd::Bench(a) => bench(seed, a),
        Cmd::Attack(a) => attack_cmd(seed, a),
        Cmd::Selftest(a) => selftest(seed, a),
        Cmd::Run(a) => run(seed, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
