//! RV32I interpreter state and execution.
//!
//! The custom instructions pass operands through memory blocks addressed by
//! registers, since `idx`, `C0`, `C` and `R3` do not fit in 32-bit registers:
//!
//! * `inner_puf_init rd, rs1`: `x[rs1]` points at `{idx: u32 LE, C0: u64 LE}`
//!   (12 bytes).
//! * `outer_puf_chal rd, rs1, rs2`: `x[rs1]` points at `{idx: u32 LE, C: 16
//!   bytes}` (20 bytes, `C` taken in memory order, most significant bit of
//!   each byte first); the 32-byte `R3` is written at `x[rs2]`.
//!
//! Both write a status code to `rd` (see [`DeviceStatus`]); on error neither
//! the output region nor the aux table changes.

use serde::{Deserialize, Serialize};

use super::decode::{decode, AluOp, BranchOp, Instr, LoadOp, StoreOp};
use super::device::{DeviceStatus, PufDevice};
use crate::bits::BitString;
use crate::hash::{DIGEST_BYTES, OUTER_CHALLENGE_BITS};

pub const DEFAULT_MEMORY_BYTES: usize = 1 << 20;
pub const INIT_BLOCK_BYTES: usize = 12;
pub const CHAL_BLOCK_BYTES: usize = 4 + OUTER_CHALLENGE_BITS / 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trap {
    IllegalInstruction { pc: u32, word: u32 },
    MemoryFault { pc: u32, addr: u32 },
    MisalignedJump { pc: u32, target: u32 },
    EnvironmentCall { pc: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Halted,
    Trap(Trap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Halted,
    Trapped,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunResult {
    pub status: RunStatus,
    pub trap: Option<Trap>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryWindow {
    pub addr: u32,
    pub hex: String,
}

/// JSON dump of the machine after a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineDump {
    pub schema_version: u32,
    pub status: RunStatus,
    pub trap: Option<Trap>,
    pub steps: u64,
    pub pc: u32,
    pub regs: Vec<u32>,
    pub memory: Vec<MemoryWindow>,
}

#[derive(Debug, Clone)]
pub struct Machine {
    regs: [u32; 32],
    pc: u32,
    mem: Vec<u8>,
    device: PufDevice,
}

impl Machine {
    pub fn new(memory_bytes: usize, device: PufDevice) -> Self {
        Self {
            regs: [0; 32],
            pc: 0,
            mem: vec![0; memory_bytes],
            device,
        }
    }

    pub fn pc(&self) -> u32 {
        self.pc
    }

    pub fn set_pc(&mut self, pc: u32) {
        self.pc = pc;
    }

    pub fn reg(&self, r: u8) -> u32 {
        self.regs[r as usize]
    }

    pub fn regs(&self) -> &[u32; 32] {
        &self.regs
    }

    pub fn set_reg(&mut self, r: u8, v: u32) {
        if r != 0 {
            self.regs[r as usize] = v;
        }
    }

    pub fn memory(&self) -> &[u8] {
        &self.mem
    }

    pub fn device(&self) -> &PufDevice {
        &self.device
    }

    pub fn device_mut(&mut self) -> &mut PufDevice {
        &mut self.device
    }

    fn range(&self, addr: u32, len: usize) -> Option<std::ops::Range<usize>> {
        let start = addr as usize;
        let end = start.checked_add(len)?;
        (end <= self.mem.len()).then_some(start..end)
    }

    pub fn read(&self, addr: u32, len: usize) -> Option<&[u8]> {
        self.range(addr, len).map(|r| &self.mem[r])
    }

    pub fn write(&mut self, addr: u32, bytes: &[u8]) -> Option<()> {
        let r = self.range(addr, bytes.len())?;
        self.mem[r].copy_from_slice(bytes);
        Some(())
    }

    /// Copies little-endian words to memory starting at `addr`.
    pub fn load_words(&mut self, addr: u32, words: &[u32]) -> Option<()> {
        let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        self.write(addr, &bytes)
    }

    fn load(&self, addr: u32, len: usize) -> Result<u32, u32> {
        let b = self.read(addr, len).ok_or(addr)?;
        let mut buf = [0u8; 4];
        buf[..len].copy_from_slice(b);
        Ok(u32::from_le_bytes(buf))
    }

    pub fn step(&mut self) -> StepOutcome {
        let pc = self.pc;
        let word = match self.load(pc, 4) {
            Ok(w) if pc % 4 == 0 => w,
            Ok(_) => return StepOutcome::Trap(Trap::MisalignedJump { pc, target: pc }),
            Err(addr) => return StepOutcome::Trap(Trap::MemoryFault { pc, addr }),
        };
        let instr = match decode(word) {
            Ok(i) => i,
            Err(_) => return StepOutcome::Trap(Trap::IllegalInstruction { pc, word }),
        };
        let mut next = pc.wrapping_add(4);
        let regs = self.regs;
        let x = |r: u8| regs[r as usize];
        match instr {
            Instr::Lui { rd, imm } => self.set_reg(rd, imm as u32),
            Instr::Auipc { rd, imm } => self.set_reg(rd, pc.wrapping_add(imm as u32)),
            Instr::Jal { rd, imm } => {
                let target = pc.wrapping_add(imm as u32);
                if target % 4 != 0 {
                    return StepOutcome::Trap(Trap::MisalignedJump { pc, target });
                }
                self.set_reg(rd, next);
                next = target;
            }
            Instr::Jalr { rd, rs1, imm } => {
                let target = x(rs1).wrapping_add(imm as u32) & !1;
                if target % 4 != 0 {
                    return StepOutcome::Trap(Trap::MisalignedJump { pc, target });
                }
                self.set_reg(rd, next);
                next = target;
            }
            Instr::Branch { op, rs1, rs2, imm } => {
                let (a, b) = (x(rs1), x(rs2));
                let taken = match op {
                    BranchOp::Eq => a == b,
                    BranchOp::Ne => a != b,
                    BranchOp::Lt => (a as i32) < (b as i32),
                    BranchOp::Ge => (a as i32) >= (b as i32),
                    BranchOp::Ltu => a < b,
                    BranchOp::Geu => a >= b,
                };
                if taken {
                    let target = pc.wrapping_add(imm as u32);
                    if target % 4 != 0 {
                        return StepOutcome::Trap(Trap::MisalignedJump { pc, target });
                    }
                    next = target;
                }
            }
            Instr::Load { op, rd, rs1, imm } => {
                let addr = x(rs1).wrapping_add(imm as u32);
                let len = match op {
                    LoadOp::Lb | LoadOp::Lbu => 1,
                    LoadOp::Lh | LoadOp::Lhu => 2,
                    LoadOp::Lw => 4,
                };
                let v = match self.load(addr, len) {
                    Ok(v) => v,
                    Err(addr) => return StepOutcome::Trap(Trap::MemoryFault { pc, addr }),
                };
                let v = match op {
                    LoadOp::Lb => v as u8 as i8 as i32 as u32,
                    LoadOp::Lh => v as u16 as i16 as i32 as u32,
                    _ => v,
                };
                self.set_reg(rd, v);
            }
            Instr::Store { op, rs1, rs2, imm } => {
                let addr = x(rs1).wrapping_add(imm as u32);
                let bytes = x(rs2).to_le_bytes();
                let len = match op {
                    StoreOp::Sb => 1,
                    StoreOp::Sh => 2,
                    StoreOp::Sw => 4,
                };
                if self.write(addr, &bytes[..len]).is_none() {
                    return StepOutcome::Trap(Trap::MemoryFault { pc, addr });
                }
            }
            Instr::OpImm { op, rd, rs1, imm } => {
                let v = alu(op, x(rs1), imm as u32);
                self.set_reg(rd, v);
            }
            Instr::Op { op, rd, rs1, rs2 } => {
                let v = alu(op, x(rs1), x(rs2));
                self.set_reg(rd, v);
            }
            Instr::Fence => {}
            Instr::Ecall => return StepOutcome::Trap(Trap::EnvironmentCall { pc }),
            Instr::Ebreak => return StepOutcome::Halted,
            Instr::InnerPufInit { rs1, rd } => self.exec_inner_puf_init(rs1, rd),
            Instr::OuterPufChal { rs1, rs2, rd } => self.exec_outer_puf_chal(rs1, rs2, rd),
        }
        self.pc = next;
        StepOutcome::Continue
    }

    fn exec_inner_puf_init(&mut self, rs1: u8, rd: u8) {
        let status = self.inner_puf_init_status(self.reg(rs1));
        self.set_reg(rd, status);
    }

    fn inner_puf_init_status(&mut self, addr: u32) -> u32 {
        let Some(block) = self.read(addr, INIT_BLOCK_BYTES) else {
            return DeviceStatus::MemoryFault.code();
        };
        let idx = u32::from_le_bytes(block[..4].try_into().unwrap());
        let c0 = u64::from_le_bytes(block[4..12].try_into().unwrap());
        match self.device.inner_puf_init(idx, c0) {
            Ok(()) => DeviceStatus::OK,
            Err(e) => e.code(),
        }
    }

    fn exec_outer_puf_chal(&mut self, rs1: u8, rs2: u8, rd: u8) {
        let status = self.outer_puf_chal_status(self.reg(rs1), self.reg(rs2));
        self.set_reg(rd, status);
    }

    fn outer_puf_chal_status(&mut self, block_addr: u32, out_addr: u32) -> u32 {
        let Some(block) = self.read(block_addr, CHAL_BLOCK_BYTES) else {
            return DeviceStatus::MemoryFault.code();
        };
        let idx = u32::from_le_bytes(block[..4].try_into().unwrap());
        let outer = BitString::from_bytes(&block[4..], OUTER_CHALLENGE_BITS).expect("16 bytes");
        if self.range(out_addr, DIGEST_BYTES).is_none() {
            return DeviceStatus::MemoryFault.code();
        }
        match self.device.outer_puf_chal(idx, &outer) {
            Ok(r3) => {
                self.write(out_addr, r3.as_bytes()).expect("range checked");
                DeviceStatus::OK
            }
            Err(e) => e.code(),
        }
    }

    pub fn run(&mut self, max_steps: u64) -> RunResult {
        let mut steps = 0;
        while steps < max_steps {
            steps += 1;
            match self.step() {
                StepOutcome::Continue => {}
                StepOutcome::Halted => {
                    return RunResult {
                        status: RunStatus::Halted,
                        trap: None,
                        steps,
                    }
                }
                StepOutcome::Trap(t) => {
                    return RunResult {
                        status: RunStatus::Trapped,
                        trap: Some(t),
                        steps,
                    }
                }
            }
        }
        RunResult {
            status: RunStatus::StepLimit,
            trap: None,
            steps,
        }
    }

    /// Snapshot for JSON output; `windows` lists `(addr, len)` memory ranges
    /// to include (out-of-range windows are clipped).
    pub fn dump(&self, result: &RunResult, windows: &[(u32, usize)]) -> MachineDump {
        let memory = windows
            .iter()
            .map(|&(addr, len)| {
                let start = (addr as usize).min(self.mem.len());
                let end = start.saturating_add(len).min(self.mem.len());
                MemoryWindow {
                    addr,
                    hex: hex::encode(&self.mem[start..end]),
                }
            })
            .collect();
        MachineDump {
            schema_version: 1,
            status: result.status,
            trap: result.trap,
            steps: result.steps,
            pc: self.pc,
            regs: self.regs.to_vec(),
            memory,
        }
    }
}

fn alu(op: AluOp, a: u32, b: u32) -> u32 {
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Sll => a << (b & 31),
        AluOp::Slt => ((a as i32) < (b as i32)) as u32,
        AluOp::Sltu => (a < b) as u32,
        AluOp::Xor => a ^ b,
        AluOp::Srl => a >> (b & 31),
        AluOp::Sra => ((a as i32) >> (b & 31)) as u32,
        AluOp::Or => a | b,
        AluOp::And => a & b,
    }
}
