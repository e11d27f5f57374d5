//! Instruction encoders for building test and demo programs.

use super::decode::{RawFields, FUNCT3_INNER_PUF_INIT, FUNCT3_OUTER_PUF_CHAL, OPCODE_PUF};

fn r_type(funct7: u32, rs2: u8, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    RawFields {
        funct7,
        rs2: rs2 as u32,
        rs1: rs1 as u32,
        funct3,
        rd: rd as u32,
        opcode,
    }
    .encode()
}

fn i_type(imm: i32, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    assert!((-2048..2048).contains(&imm), "I-immediate {imm} out of range");
    ((imm as u32 & 0xfff) << 20) | (rs1 as u32) << 15 | funct3 << 12 | (rd as u32) << 7 | opcode
}

fn s_type(imm: i32, rs2: u8, rs1: u8, funct3: u32) -> u32 {
    assert!((-2048..2048).contains(&imm), "S-immediate {imm} out of range");
    let imm = imm as u32;
    ((imm >> 5) & 0x7f) << 25
        | (rs2 as u32) << 20
        | (rs1 as u32) << 15
        | funct3 << 12
        | (imm & 0x1f) << 7
        | 0b010_0011
}

fn b_type(imm: i32, rs2: u8, rs1: u8, funct3: u32) -> u32 {
    assert!(imm % 2 == 0 && (-4096..4096).contains(&imm), "B-immediate {imm} invalid");
    let imm = imm as u32;
    ((imm >> 12) & 1) << 31
        | ((imm >> 5) & 0x3f) << 25
        | (rs2 as u32) << 20
        | (rs1 as u32) << 15
        | funct3 << 12
        | ((imm >> 1) & 0xf) << 8
        | ((imm >> 11) & 1) << 7
        | 0b110_0011
}

pub fn inner_puf_init(rd: u8, rs1: u8) -> u32 {
    r_type(0, 0, rs1, FUNCT3_INNER_PUF_INIT, rd, OPCODE_PUF)
}

pub fn outer_puf_chal(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, FUNCT3_OUTER_PUF_CHAL, rd, OPCODE_PUF)
}

pub fn add(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 0, rd, 0b011_0011)
}

pub fn sub(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0b010_0000, rs2, rs1, 0, rd, 0b011_0011)
}

pub fn addi(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 0, rd, 0b001_0011)
}

pub fn xori(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 4, rd, 0b001_0011)
}

pub fn slli(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type(shamt as i32 & 0x1f, rs1, 1, rd, 0b001_0011)
}

pub fn lui(rd: u8, imm20: u32) -> u32 {
    (imm20 & 0xfffff) << 12 | (rd as u32) << 7 | 0b011_0111
}

pub fn lw(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 2, rd, 0b000_0011)
}

pub fn lbu(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 4, rd, 0b000_0011)
}

pub fn sw(rs2: u8, rs1: u8, imm: i32) -> u32 {
    s_type(imm, rs2, rs1, 2)
}

pub fn sb(rs2: u8, rs1: u8, imm: i32) -> u32 {
    s_type(imm, rs2, rs1, 0)
}

pub fn beq(rs1: u8, rs2: u8, imm: i32) -> u32 {
    b_type(imm, rs2, rs1, 0)
}

pub fn bne(rs1: u8, rs2: u8, imm: i32) -> u32 {
    b_type(imm, rs2, rs1, 1)
}

pub fn jal(rd: u8, imm: i32) -> u32 {
    assert!(imm % 2 == 0 && (-(1 << 20)..(1 << 20)).contains(&imm));
    let imm = imm as u32;
    ((imm >> 20) & 1) << 31
        | ((imm >> 1) & 0x3ff) << 21
        | ((imm >> 11) & 1) << 20
        | ((imm >> 12) & 0xff) << 12
        | (rd as u32) << 7
        | 0b110_1111
}

pub fn jalr(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 0, rd, 0b110_0111)
}

pub const EBREAK: u32 = 0x0010_0073;
pub const ECALL: u32 = 0x0000_0073;

/// `lui` + `addi` sequence loading an arbitrary 32-bit constant.
pub fn li(rd: u8, value: u32) -> Vec<u32> {
    let low = ((value & 0xfff) as i32) << 20 >> 20;
    let high = value.wrapping_sub(low as u32) >> 12;
    match (high, low) {
        (0, _) => vec![addi(rd, 0, low)],
        (_, 0) => vec![lui(rd, high)],
        _ => vec![lui(rd, high), addi(rd, rd, low)],
    }
}

/// Stores `bytes` at `base + offset` through register `addr_reg`, using
/// `scratch` as a temporary. Emits word stores for whole words.
pub fn store_bytes(addr_reg: u8, scratch: u8, offset: i32, bytes: &[u8]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut chunks = bytes.chunks_exact(4);
    let mut off = offset;
    for c in &mut chunks {
        out.extend(li(scratch, u32::from_le_bytes(c.try_into().unwrap())));
        out.push(sw(scratch, addr_reg, off));
        off += 4;
    }
    for &b in chunks.remainder() {
        out.extend(li(scratch, b as u32));
        out.push(sb(scratch, addr_reg, off));
        off += 1;
    }
    out
}

/// Program that writes both parameter blocks at `data`, runs
/// `inner_puf_init` then `outer_puf_chal`, and halts.
///
/// Init status lands in `x10`, chal status in `x12`, `R3` at `out`.
pub fn init_and_chal(idx: u32, c0: u64, outer: &[u8; 16], data: u32, out: u32) -> Vec<u32> {
    let mut init_block = idx.to_le_bytes().to_vec();
    init_block.extend(c0.to_le_bytes());
    let mut chal_block = idx.to_le_bytes().to_vec();
    chal_block.extend(outer);

    let mut p = li(5, data);
    p.extend(store_bytes(5, 28, 0, &init_block));
    p.push(inner_puf_init(10, 5));
    p.extend(li(6, data + 16));
    p.extend(store_bytes(6, 28, 0, &chal_block));
    p.extend(li(11, out));
    p.push(outer_puf_chal(12, 6, 11));
    p.push(EBREAK);
    p
}
