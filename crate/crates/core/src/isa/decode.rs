//! RV32I instruction decoding plus the two custom PUF instructions at major
//! opcode `0101011` (custom-1).
//!
//! | funct7 | rs2 | rs1 | funct3 | rd | opcode  | instruction      |
//! |--------|-----|-----|--------|----|---------|------------------|
//! | 0      | 0   | rs1 | 001    | rd | 0101011 | `inner_puf_init` |
//! | 0      | rs2 | rs1 | 010    | rd | 0101011 | `outer_puf_chal` |

use super::IsaError;

pub const OPCODE_PUF: u32 = 0b010_1011;
pub const FUNCT3_INNER_PUF_INIT: u32 = 0b001;
pub const FUNCT3_OUTER_PUF_CHAL: u32 = 0b010;

const OPCODE_LUI: u32 = 0b011_0111;
const OPCODE_AUIPC: u32 = 0b001_0111;
const OPCODE_JAL: u32 = 0b110_1111;
const OPCODE_JALR: u32 = 0b110_0111;
const OPCODE_BRANCH: u32 = 0b110_0011;
const OPCODE_LOAD: u32 = 0b000_0011;
const OPCODE_STORE: u32 = 0b010_0011;
const OPCODE_OP_IMM: u32 = 0b001_0011;
const OPCODE_OP: u32 = 0b011_0011;
const OPCODE_MISC_MEM: u32 = 0b000_1111;
const OPCODE_SYSTEM: u32 = 0b111_0011;

/// R-type field split of an instruction word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawFields {
    pub funct7: u32,
    pub rs2: u32,
    pub rs1: u32,
    pub funct3: u32,
    pub rd: u32,
    pub opcode: u32,
}

impl RawFields {
    pub fn from_word(w: u32) -> Self {
        Self {
            funct7: w >> 25,
            rs2: (w >> 20) & 0x1f,
            rs1: (w >> 15) & 0x1f,
            funct3: (w >> 12) & 0x7,
            rd: (w >> 7) & 0x1f,
            opcode: w & 0x7f,
        }
    }

    pub fn encode(&self) -> u32 {
        (self.funct7 & 0x7f) << 25
            | (self.rs2 & 0x1f) << 20
            | (self.rs1 & 0x1f) << 15
            | (self.funct3 & 0x7) << 12
            | (self.rd & 0x1f) << 7
            | (self.opcode & 0x7f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchOp {
    Eq,
    Ne,
    Lt,
    Ge,
    Ltu,
    Geu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadOp {
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreOp {
    Sb,
    Sh,
    Sw,
}

/// Register indices are `u8` in `0..32`; immediates are sign-extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Lui { rd: u8, imm: i32 },
    Auipc { rd: u8, imm: i32 },
    Jal { rd: u8, imm: i32 },
    Jalr { rd: u8, rs1: u8, imm: i32 },
    Branch { op: BranchOp, rs1: u8, rs2: u8, imm: i32 },
    Load { op: LoadOp, rd: u8, rs1: u8, imm: i32 },
    Store { op: StoreOp, rs1: u8, rs2: u8, imm: i32 },
    OpImm { op: AluOp, rd: u8, rs1: u8, imm: i32 },
    Op { op: AluOp, rd: u8, rs1: u8, rs2: u8 },
    Fence,
    Ecall,
    Ebreak,
    InnerPufInit { rs1: u8, rd: u8 },
    OuterPufChal { rs1: u8, rs2: u8, rd: u8 },
}

impl Instr {
    pub fn is_custom(&self) -> bool {
        matches!(self, Instr::InnerPufInit { .. } | Instr::OuterPufChal { .. })
    }
}

fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}

fn imm_s(w: u32) -> i32 {
    (((w & 0xfe00_0000) as i32) >> 20) | ((w >> 7) & 0x1f) as i32
}

fn imm_b(w: u32) -> i32 {
    (((w & 0x8000_0000) as i32) >> 19)
        | (((w >> 7) & 1) << 11) as i32
        | (((w >> 25) & 0x3f) << 5) as i32
        | (((w >> 8) & 0xf) << 1) as i32
}

fn imm_u(w: u32) -> i32 {
    (w & 0xffff_f000) as i32
}

fn imm_j(w: u32) -> i32 {
    (((w & 0x8000_0000) as i32) >> 11)
        | (w & 0x000f_f000) as i32
        | (((w >> 20) & 1) << 11) as i32
        | (((w >> 21) & 0x3ff) << 1) as i32
}

pub fn decode(word: u32) -> Result<Instr, IsaError> {
    let f = RawFields::from_word(word);
    let (rd, rs1, rs2) = (f.rd as u8, f.rs1 as u8, f.rs2 as u8);
    let illegal = Err(IsaError::IllegalInstruction(word));
    let instr = match f.opcode {
        OPCODE_PUF => match (f.funct3, f.funct7) {
            (FUNCT3_INNER_PUF_INIT, 0) if f.rs2 == 0 => Instr::InnerPufInit { rs1, rd },
            (FUNCT3_OUTER_PUF_CHAL, 0) => Instr::OuterPufChal { rs1, rs2, rd },
            _ => return illegal,
        },
        OPCODE_LUI => Instr::Lui { rd, imm: imm_u(word) },
        OPCODE_AUIPC => Instr::Auipc { rd, imm: imm_u(word) },
        OPCODE_JAL => Instr::Jal { rd, imm: imm_j(word) },
        OPCODE_JALR if f.funct3 == 0 => Instr::Jalr {
            rd,
            rs1,
            imm: imm_i(word),
        },
        OPCODE_BRANCH => {
            let op = match f.funct3 {
                0 => BranchOp::Eq,
                1 => BranchOp::Ne,
                4 => BranchOp::Lt,
                5 => BranchOp::Ge,
                6 => BranchOp::Ltu,
                7 => BranchOp::Geu,
                _ => return illegal,
            };
            Instr::Branch {
                op,
                rs1,
                rs2,
                imm: imm_b(word),
            }
        }
        OPCODE_LOAD => {
            let op = match f.funct3 {
                0 => LoadOp::Lb,
                1 => LoadOp::Lh,
                2 => LoadOp::Lw,
                4 => LoadOp::Lbu,
                5 => LoadOp::Lhu,
                _ => return illegal,
            };
            Instr::Load {
                op,
                rd,
                rs1,
                imm: imm_i(word),
            }
        }
        OPCODE_STORE => {
            let op = match f.funct3 {
                0 => StoreOp::Sb,
                1 => StoreOp::Sh,
                2 => StoreOp::Sw,
                _ => return illegal,
            };
            Instr::Store {
                op,
                rs1,
                rs2,
                imm: imm_s(word),
            }
        }
        OPCODE_OP_IMM => {
            let imm = imm_i(word);
            let op = match (f.funct3, f.funct7) {
                (0, _) => AluOp::Add,
                (2, _) => AluOp::Slt,
                (3, _) => AluOp::Sltu,
                (4, _) => AluOp::Xor,
                (6, _) => AluOp::Or,
                (7, _) => AluOp::And,
                (1, 0) => AluOp::Sll,
                (5, 0) => AluOp::Srl,
                (5, 0b010_0000) => AluOp::Sra,
                _ => return illegal,
            };
            let imm = match op {
                AluOp::Sll | AluOp::Srl | AluOp::Sra => (f.rs2) as i32,
                _ => imm,
            };
            Instr::OpImm { op, rd, rs1, imm }
        }
        OPCODE_OP => {
            let op = match (f.funct3, f.funct7) {
                (0, 0) => AluOp::Add,
                (0, 0b010_0000) => AluOp::Sub,
                (1, 0) => AluOp::Sll,
                (2, 0) => AluOp::Slt,
                (3, 0) => AluOp::Sltu,
                (4, 0) => AluOp::Xor,
                (5, 0) => AluOp::Srl,
                (5, 0b010_0000) => AluOp::Sra,
                (6, 0) => AluOp::Or,
                (7, 0) => AluOp::And,
                _ => return illegal,
            };
            Instr::Op { op, rd, rs1, rs2 }
        }
        OPCODE_MISC_MEM if f.funct3 == 0 => Instr::Fence,
        OPCODE_SYSTEM => match word {
            0x0000_0073 => Instr::Ecall,
            0x0010_0073 => Instr::Ebreak,
            _ => return illegal,
        },
        _ => return illegal,
    };
    Ok(instr)
}
