//! Simulation and analysis toolkit for entangled-pair measurement records.
//!
//! The crate is organised bottom-up:
//!
//! * [`qstate`]: closed-form two-qubit state algebra (reduced density matrix,
//!   rotated-basis probabilities, joint outcome distribution).
//! * [`protocol`]: seeded Bob/Alice measurement sessions, axis scrambling and
//!   the block-keyed transmission channel built on top of them.
//! * [`ait`]: entropy, complexity bounds, the Champernowne generator, an
//!   LZ76 phrase-count complexity estimator and frequency tests.
//! * [`channel`]: binary asymmetric channel capacity, closed form and a
//!   brute-force mutual-information oracle.
//! * [`omega`]: a bounded-step prefix-free toy machine whose halting
//!   probability is exactly computable, with the dovetailing decision
//!   procedures that consume it.

pub mod ait;
pub mod bits;
pub mod channel;
mod error;
pub mod omega;
pub mod protocol;
pub mod qstate;
pub mod seed;

pub use bits::BitString;
pub use error::{Error, Result};
