use serde::{Deserialize, Serialize};

use crate::{BitString, Error, Result};

/// Largest program length accepted by [`enumerate_programs`].
pub const MAX_ENUM_LEN: u32 = 28;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opcode {
    Halt,
    Out0,
    Out1,
    Inc,
    /// Decrement, floored at 0.
    Dec,
    /// Skip the next instruction when the register is 0.
    Jz,
    /// Jump to the instruction two before this one (clamped to the first).
    JmpBack2,
    Nop,
}

impl Opcode {
    pub fn from_bits(v: u8) -> Self {
        match v & 0b111 {
            0b000 => Opcode::Halt,
            0b001 => Opcode::Out0,
            0b010 => Opcode::Out1,
            0b011 => Opcode::Inc,
            0b100 => Opcode::Dec,
            0b101 => Opcode::Jz,
            0b110 => Opcode::JmpBack2,
            _ => Opcode::Nop,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            Opcode::Halt => 0b000,
            Opcode::Out0 => 0b001,
            Opcode::Out1 => 0b010,
            Opcode::Inc => 0b011,
            Opcode::Dec => 0b100,
            Opcode::Jz => 0b101,
            Opcode::JmpBack2 => 0b110,
            Opcode::Nop => 0b111,
        }
    }
}

/// A self-delimiting program `1^L 0 body`, `body` = `L` opcodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToyProgram {
    code: BitString,
    ops: Vec<Opcode>,
}

impl ToyProgram {
    /// Parses a complete code word; trailing or missing bits are rejected.
    pub fn parse(code: &BitString) -> Result<Self> {
        let ones = code.iter().take_while(|&b| b).count();
        if ones == 0 {
            return Err(Error::InvalidProgram("empty instruction count".into()));
        }
        if ones == code.len() {
            return Err(Error::InvalidProgram("unterminated length header".into()));
        }
        let expected = 4 * ones + 1;
        if code.len() != expected {
            return Err(Error::InvalidProgram(format!(
                "header announces {ones} instructions ({expected} bits), code has {} bits",
                code.len()
            )));
        }
        let ops = (0..ones)
            .map(|k| {
                let at = ones + 1 + 3 * k;
                let v = (0..3).fold(0u8, |acc, j| (acc << 1) | u8::from(code.get(at + j)));
                Opcode::from_bits(v)
            })
            .collect();
        Ok(Self {
            code: code.clone(),
            ops,
        })
    }

    pub fn from_ops(ops: &[Opcode]) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidProgram("program needs at least one instruction".into()));
        }
        let mut code = BitString::with_capacity(4 * ops.len() + 1);
        code.extend(std::iter::repeat_n(true, ops.len()));
        code.push(false);
        for op in ops {
            let v = op.bits();
            code.extend((0..3).rev().map(|s| (v >> s) & 1 == 1));
        }
        Ok(Self {
            code,
            ops: ops.to_vec(),
        })
    }

    pub fn code(&self) -> &BitString {
        &self.code
    }

    /// `l(pi)` in bits.
    pub fn length(&self) -> u32 {
        self.code.len() as u32
    }

    pub fn ops(&self) -> &[Opcode] {
        &self.ops
    }
}

/// Every program with at most `max_len` bits, by length then lexicographically.
pub fn enumerate_programs(max_len: u32) -> Result<Vec<ToyProgram>> {
    if max_len > MAX_ENUM_LEN {
        return Err(Error::MaxLenTooLarge {
            max_len,
            limit: MAX_ENUM_LEN,
        });
    }
    let mut out = Vec::new();
    let mut count = 1usize;
    while 4 * count < max_len as usize {
        for body in 0u64..(1u64 << (3 * count)) {
            let ops: Vec<Opcode> = (0..count)
                .map(|k| Opcode::from_bits((body >> (3 * (count - 1 - k))) as u8))
                .collect();
            out.push(ToyProgram::from_ops(&ops)?);
        }
        count += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Halted,
    ExhaustedBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineResult {
    pub status: RunStatus,
    /// Emitted bits; empty unless the program halted.
    pub output: BitString,
    pub steps: u64,
}

/// Resumable interpreter state. One step executes one instruction; running
/// past the last instruction halts without consuming a step.
#[derive(Debug, Clone)]
pub struct Machine<'p> {
    ops: &'p [Opcode],
    pc: usize,
    register: u64,
    output: BitString,
    steps: u64,
    halted: bool,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p ToyProgram) -> Self {
        Self {
            ops: program.ops(),
            pc: 0,
            register: 0,
            output: BitString::new(),
            steps: 0,
            halted: program.ops().is_empty(),
        }
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn output(&self) -> &BitString {
        &self.output
    }

    /// Runs until halted or `steps == limit`. Returns whether it halted.
    pub fn run_until(&mut self, limit: u64) -> bool {
        while !self.halted && self.steps < limit {
            self.step();
        }
        self.halted
    }

    fn step(&mut self) {
        let op = self.ops[self.pc];
        self.steps += 1;
        let mut next = self.pc + 1;
        match op {
            Opcode::Halt => {
                self.halted = true;
                return;
            }
            Opcode::Out0 => self.output.push(false),
            Opcode::Out1 => self.output.push(true),
            Opcode::Inc => self.register = self.register.saturating_add(1),
            Opcode::Dec => self.register = self.register.saturating_sub(1),
            Opcode::Jz => {
                if self.register == 0 {
                    next = self.pc + 2;
                }
            }
            Opcode::JmpBack2 => next = self.pc.saturating_sub(2),
            Opcode::Nop => {}
        }
        self.pc = next;
        if self.pc >= self.ops.len() {
            self.halted = true;
        }
    }

    pub fn into_result(self) -> MachineResult {
        if self.halted {
            MachineResult {
                status: RunStatus::Halted,
                output: self.output,
                steps: self.steps,
            }
        } else {
            MachineResult {
                status: RunStatus::ExhaustedBudget,
                output: BitString::new(),
                steps: self.steps,
            }
        }
    }
}

/// Direct bounded simulation of one program.
pub fn run_program(program: &ToyProgram, budget: u64) -> MachineResult {
    let mut m = Machine::new(program);
    m.run_until(budget);
    m.into_result()
}
