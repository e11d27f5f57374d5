use proptest::prelude::*;
use risecure::bits::BitString;
use risecure::ecc::CodeSpec;
use risecure::fuzzy;
use risecure::hash::{select_output, HashAlg, Output, OutputMode, OutputRequest};
use risecure::isa::{asm, decode, DeviceStatus, Instr, Machine, Program, PufDevice, RawFields, RunStatus, Trap};
use risecure::puf::{new_puf, Challenge, PufInstance, PufParams};

const DATA: u32 = 0x1000;
const OUT: u32 = 0x2000;

fn sram() -> PufInstance {
    new_puf(11, PufParams::sram(127, 0.05)).unwrap()
}

fn machine(prefill: bool) -> Machine {
    let mut dev = PufDevice::new(CodeSpec::bch_default(), HashAlg::Sha3_256, 16, 42).unwrap();
    dev.set_prefill_on_init(prefill);
    dev.register(3, sram());
    Machine::new(1 << 16, dev)
}

fn run(m: &mut Machine, words: &[u32]) -> risecure::isa::RunResult {
    m.load_program(&Program::from_words(0, words)).unwrap();
    m.set_pc(0);
    m.run(100_000)
}

#[test]
fn addi_then_ebreak() {
    let mut m = machine(true);
    let r = run(&mut m, &[asm::addi(1, 0, 42), asm::EBREAK]);
    assert_eq!(r.status, RunStatus::Halted);
    assert_eq!(r.steps, 2);
    assert_eq!(m.reg(1), 42);
}

#[test]
fn x0_is_hardwired() {
    let mut m = machine(true);
    run(&mut m, &[asm::addi(0, 0, 5), asm::lui(0, 0xfffff), asm::EBREAK]);
    assert_eq!(m.reg(0), 0);
}

#[test]
fn li_loads_any_constant() {
    for v in [0u32, 1, 0x7ff, 0x800, 0xfff, 0x1000, 0x8000_0000, 0xffff_ffff, 0x1234_5678, 0xdead_beef] {
        let mut m = machine(true);
        let mut p = asm::li(9, v);
        p.push(asm::EBREAK);
        run(&mut m, &p);
        assert_eq!(m.reg(9), v, "{v:#x}");
    }
}

#[test]
fn loops_and_memory() {
    // sum 1..=10 into x1, store at 0x800, load back into x3
    let p = [
        asm::addi(2, 0, 10),
        asm::add(1, 1, 2),
        asm::addi(2, 2, -1),
        asm::bne(2, 0, -8),
        asm::addi(4, 0, 0x7f0),
        asm::sw(1, 4, 0x10),
        asm::lw(3, 4, 0x10),
        asm::EBREAK,
    ];
    let mut m = machine(true);
    assert_eq!(run(&mut m, &p).status, RunStatus::Halted);
    assert_eq!(m.reg(1), 55);
    assert_eq!(m.reg(3), 55);
}

#[test]
fn traps_preserve_pc() {
    let mut m = machine(true);
    let r = run(&mut m, &[asm::addi(1, 0, 1), 0xffff_ffff]);
    assert_eq!(r.trap, Some(Trap::IllegalInstruction { pc: 4, word: 0xffff_ffff }));
    assert_eq!(m.pc(), 4);

    let mut m = machine(true);
    let r = run(&mut m, &[asm::ECALL]);
    assert_eq!(r.trap, Some(Trap::EnvironmentCall { pc: 0 }));

    // jump far outside the 64 KiB memory
    let mut m = machine(true);
    let mut p = asm::li(5, 0x0100_0000);
    p.push(asm::jalr(0, 5, 0));
    let r = run(&mut m, &p);
    assert_eq!(r.status, RunStatus::Trapped);
    assert!(matches!(r.trap, Some(Trap::MemoryFault { pc: 0x0100_0000, .. })));

    let mut m = machine(true);
    let r = run(&mut m, &[asm::addi(5, 0, 6), asm::jalr(0, 5, 0)]);
    assert!(matches!(r.trap, Some(Trap::MisalignedJump { pc: 4, .. })));
    assert_eq!(m.pc(), 4);
}

#[test]
fn init_with_unknown_index() {
    let mut m = machine(true);
    let r = run(&mut m, &asm::init_and_chal(9, 0x1234, &[7; 16], DATA, OUT));
    assert_eq!(r.status, RunStatus::Halted);
    assert_eq!(m.reg(10), DeviceStatus::UnknownIndex.code());
    assert_eq!(m.reg(12), DeviceStatus::UnknownIndex.code());
    assert!(m.device().aux_table().is_empty());
    assert!(m.read(OUT, 32).unwrap().iter().all(|&b| b == 0));
}

#[test]
fn chal_before_init() {
    let mut block = 3u32.to_le_bytes().to_vec();
    block.extend([1u8; 16]);
    let mut p = asm::li(6, DATA);
    p.extend(asm::store_bytes(6, 28, 0, &block));
    p.extend(asm::li(11, OUT));
    p.push(asm::outer_puf_chal(12, 6, 11));
    p.push(asm::EBREAK);
    let mut m = machine(true);
    run(&mut m, &p);
    assert_eq!(m.reg(12), DeviceStatus::UnknownIndex.code());
    assert!(m.read(OUT, 32).unwrap().iter().all(|&b| b == 0));
    assert_eq!(m.device().buffer().counters().decode_calls, 0);
}

#[test]
fn memory_faults_leave_state_untouched() {
    let mut m = machine(true);
    // init block pointer past the end of memory
    let mut p = asm::li(5, 0xffff_fff8);
    p.push(asm::inner_puf_init(10, 5));
    p.push(asm::EBREAK);
    run(&mut m, &p);
    assert_eq!(m.reg(10), DeviceStatus::MemoryFault.code());
    assert!(m.device().aux_table().is_empty());

    // valid init, then an output pointer straddling the end of memory
    let mut m = machine(true);
    let out = (1 << 16) - 16;
    let r = run(&mut m, &asm::init_and_chal(3, 5, &[0; 16], DATA, out));
    assert_eq!(r.status, RunStatus::Halted);
    assert_eq!(m.reg(10), DeviceStatus::OK);
    assert_eq!(m.reg(12), DeviceStatus::MemoryFault.code());
    assert!(m.read(out, 16).unwrap().iter().all(|&b| b == 0));
    assert_eq!(m.device().aux_table().len(), 1);
}

#[test]
fn sram_block_out_of_range() {
    let mut m = machine(true);
    run(&mut m, &asm::init_and_chal(3, 1 << 40, &[0; 16], DATA, OUT));
    assert_eq!(m.reg(10), DeviceStatus::InvalidChallenge.code());
    assert_eq!(m.reg(12), DeviceStatus::UnknownIndex.code());
    assert!(m.device().aux_table().is_empty());
}

#[test]
fn width_mismatch_status() {
    let mut dev = PufDevice::new(CodeSpec::bch_default(), HashAlg::Sha3_256, 16, 1).unwrap();
    dev.register(0, new_puf(1, PufParams::sram(64, 0.05)).unwrap());
    let mut m = Machine::new(1 << 16, dev);
    run(&mut m, &asm::init_and_chal(0, 5, &[0; 16], DATA, OUT));
    assert_eq!(m.reg(10), DeviceStatus::WidthMismatch.code());
    assert!(m.device().aux_table().is_empty());
}

#[test]
fn matches_library_path() {
    let c0 = 517u64;
    let outer = [0xa5u8; 16];
    let mut m = machine(true);
    let init_seed = m.device().init_seed(3, c0);
    let chal_seed = m.device().chal_noise_seed();
    let r = run(&mut m, &asm::init_and_chal(3, c0, &outer, DATA, OUT));
    assert_eq!(r.status, RunStatus::Halted);
    assert_eq!((m.reg(10), m.reg(12)), (0, 0));

    let code = CodeSpec::bch_default();
    let challenge = Challenge::from_u64(c0);
    let (helper, _) = fuzzy::enroll(&sram(), &challenge, &code, init_seed).unwrap();
    let aux = m.device().aux(3).unwrap();
    assert_eq!(aux.helper, helper);
    assert_eq!(aux.c0, challenge);

    let c = BitString::from_bytes(&outer, 128).unwrap();
    let req = OutputRequest {
        mode: OutputMode::Hashed,
        c0: &challenge,
        helper: Some(&helper),
        outer: Some(&c),
        noise_seed: chal_seed,
    };
    let Output::Final(r3) = select_output(&sram(), &code, HashAlg::Sha3_256, req).unwrap() else {
        panic!("hashed mode")
    };
    assert_eq!(m.read(OUT, 32).unwrap(), r3.as_bytes());
}

fn sixteen_chals(prefill: bool) -> (Machine, Vec<[u8; 32]>) {
    let mut m = machine(prefill);
    let mut p = asm::init_and_chal(3, 77, &[0x3c; 16], DATA, OUT);
    p.pop();
    // 15 more chals, each writing R3 to its own slot
    for i in 1..16 {
        p.extend(asm::li(11, OUT + 32 * i));
        p.push(asm::outer_puf_chal(12, 6, 11));
    }
    p.push(asm::EBREAK);
    assert_eq!(run(&mut m, &p).status, RunStatus::Halted);
    let outs = (0..16)
        .map(|i| m.read(OUT + 32 * i, 32).unwrap().try_into().unwrap())
        .collect();
    (m, outs)
}

#[test]
fn repeated_chals_use_buffer() {
    let (m, outs) = sixteen_chals(true);
    let c = m.device().buffer().counters();
    assert_eq!((c.decode_calls, c.hits, c.misses), (0, 16, 0));
    assert!(outs.iter().all(|o| o == &outs[0]));

    let (m2, outs2) = sixteen_chals(false);
    let c = m2.device().buffer().counters();
    assert_eq!((c.decode_calls, c.hits, c.misses), (1, 15, 1));
    assert_eq!(outs2, outs);
}

#[test]
fn program_hex_round_trip() {
    let words = asm::init_and_chal(3, 1, &[0; 16], DATA, OUT);
    let p = Program::from_words(0x100, &words);
    let back = Program::parse_hex(&p.to_hex()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn dump_is_json() {
    let mut m = machine(true);
    let r = run(&mut m, &asm::init_and_chal(3, 1, &[0; 16], DATA, OUT));
    let dump = m.dump(&r, &[(OUT, 32)]);
    let v = serde_json::to_value(&dump).unwrap();
    assert_eq!(v["status"], "halted");
    assert_eq!(v["memory"][0]["hex"].as_str().unwrap().len(), 64);
}

proptest! {
    #[test]
    fn custom_words_round_trip(rs1 in 0u32..32, rs2 in 0u32..32, rd in 0u32..32, init in any::<bool>()) {
        let fields = RawFields {
            funct7: 0,
            rs2: if init { 0 } else { rs2 },
            rs1,
            funct3: if init { 1 } else { 2 },
            rd,
            opcode: 0b010_1011,
        };
        let word = fields.encode();
        prop_assert_eq!(RawFields::from_word(word), fields);
        let instr = decode(word).unwrap();
        prop_assert!(instr.is_custom());
        match instr {
            Instr::InnerPufInit { rs1: a, rd: d } => prop_assert_eq!((a as u32, d as u32, init), (rs1, rd, true)),
            Instr::OuterPufChal { rs1: a, rs2: b, rd: d } => {
                prop_assert_eq!((a as u32, b as u32, d as u32, init), (rs1, rs2, rd, false))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn raw_fields_round_trip(word in any::<u32>()) {
        prop_assert_eq!(RawFields::from_word(word).encode(), word);
    }
}
