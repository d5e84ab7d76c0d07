//! A desk-scale halting-probability laboratory.
//!
//! Programs are `1^L 0 body` with `body` holding `L` three-bit opcodes, so
//! the code set is prefix-free by its unary header and a program has
//! `4L + 1` bits. "Halts" means halts within a fixed step budget, which
//! makes the halting probability of the machine exactly computable. The
//! decision procedures in [`dovetail`] then consume that exact value.

mod dovetail;
mod dyadic;
mod machine;

pub use dovetail::{
    compressible_via_omega, dovetail_programs, dovetail_run, halting_decision, kraft_sum,
    DecisionRoute, HaltedEntry, HaltingDecision, HaltingVerdict, OmegaLedger, OmegaVerdict,
};
pub use dyadic::Dyadic;
pub use machine::{
    enumerate_programs, run_program, Machine, MachineResult, Opcode, RunStatus, ToyProgram,
    DEFAULT_BUDGET, MAX_ENUM_LEN,
};
