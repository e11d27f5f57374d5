//! RV32I interpreter with the PUF instruction-set extension.

pub mod asm;
pub mod decode;
pub mod device;
pub mod machine;
pub mod program;

use thiserror::Error;

pub use decode::{decode, Instr, RawFields};
pub use device::{AuxRecord, DeviceStatus, PufDevice};
pub use machine::{Machine, MachineDump, RunResult, RunStatus, StepOutcome, Trap};
pub use program::Program;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsaError {
    #[error("illegal instruction {0:#010x}")]
    IllegalInstruction(u32),
    #[error("malformed program: {0}")]
    Program(String),
    #[error("program does not fit in memory at {0:#x}")]
    Load(u32),
}

impl Machine {
    pub fn load_program(&mut self, program: &Program) -> Result<(), IsaError> {
        for &(addr, word) in &program.words {
            self.write(addr, &word.to_le_bytes()).ok_or(IsaError::Load(addr))?;
        }
        Ok(())
    }
}
