use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use risecure::bits::BitString;
use risecure::buffer::{sample_with_buffer, LookasideBuffer, SampleContext};
use risecure::ecc::{CodeSpec, CodeVariant};
use risecure::fuzzy;
use risecure::hash::{select_output, HashAlg, OutputMode, OutputRequest};
use risecure::puf::{Challenge, PufInstance, PufParams};

fn setup(variant: CodeVariant) -> (PufInstance, CodeSpec, Challenge, fuzzy::HelperData) {
    let code = CodeSpec::default_for(variant);
    let p = match variant {
        CodeVariant::Bch => 0.05,
        CodeVariant::Rs => 0.002,
    };
    let puf = PufInstance::new(1, PufParams::sram(code.n_bits(), p)).unwrap();
    let c0 = Challenge::from_u64(9);
    let (helper, _) = fuzzy::enroll(&puf, &c0, &code, 1).unwrap();
    (puf, code, c0, helper)
}

fn batches(c: &mut Criterion) {
    let outer = BitString::from_u64(0x1234, 128);
    for variant in [CodeVariant::Bch, CodeVariant::Rs] {
        let (puf, code, c0, helper) = setup(variant);
        let mut g = c.benchmark_group(format!("batch_{variant}"));
        g.sample_size(20);
        for batch in [1usize, 4, 16, 32] {
            let req = |j: usize| OutputRequest {
                mode: OutputMode::Hashed,
                c0: &c0,
                helper: Some(&helper),
                outer: Some(&outer),
                noise_seed: j as u64,
            };
            g.bench_with_input(BenchmarkId::new("unbuffered", batch), &batch, |b, &n| {
                b.iter(|| (0..n).filter(|&j| select_output(&puf, &code, HashAlg::Sha3_256, req(j)).is_ok()).count())
            });
            g.bench_with_input(BenchmarkId::new("buffered", batch), &batch, |b, &n| {
                b.iter(|| {
                    let mut buf = LookasideBuffer::new(16).unwrap();
                    let ctx = SampleContext {
                        puf_id: 0,
                        puf: &puf,
                        code: &code,
                        hash: HashAlg::Sha3_256,
                    };
                    (0..n).filter(|&j| sample_with_buffer(&mut buf, ctx, req(j)).is_ok()).count()
                })
            });
        }
        g.finish();
    }
}

criterion_group!(benches, batches);
criterion_main!(benches);
