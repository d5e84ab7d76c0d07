//! Dovetailed execution and the decision procedures built on an exact Ω.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dyadic::Dyadic;
use super::machine::{enumerate_programs, Machine, ToyProgram};
use crate::{BitString, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltedEntry {
    pub program: ToyProgram,
    pub steps: u64,
    pub output: BitString,
}

/// Halted programs and the exact sum of their weights `2^-l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaLedger {
    pub omega_bound: Dyadic,
    /// In enumeration order.
    pub halted: Vec<HaltedEntry>,
    pub max_len: u32,
    pub budget: u64,
}

impl OmegaLedger {
    /// One `program_bits,halted_steps,output_bits` line per halted program.
    pub fn write_export<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.halted {
            writeln!(w, "{},{},{}", e.program.code(), e.steps, e.output)?;
        }
        Ok(())
    }
}

/// Runs every machine in interleaved rounds. Round `k` lets each live
/// machine advance to `min(2^k, budget)` total steps; machines still
/// running after the budget round are exhausted.
struct Dovetailer<'p> {
    machines: Vec<Machine<'p>>,
    live: Vec<bool>,
    budget: u64,
    limit: u64,
    finished: bool,
}

impl<'p> Dovetailer<'p> {
    fn new(programs: &'p [ToyProgram], budget: u64) -> Self {
        let machines: Vec<Machine<'p>> = programs.iter().map(Machine::new).collect();
        Self {
            live: machines.iter().map(|m| !m.halted()).collect(),
            machines,
            budget,
            limit: 1,
            finished: false,
        }
    }

    /// Indices (ascending) of machines that halted during this round, or
    /// `None` once every machine has halted or exhausted its budget.
    fn round(&mut self) -> Option<Vec<usize>> {
        if self.finished || !self.live.iter().any(|&l| l) {
            self.finished = true;
            return None;
        }
        let limit = self.limit.min(self.budget);
        self.machines
            .par_iter_mut()
            .zip(self.live.par_iter())
            .filter(|(_, &live)| live)
            .for_each(|(m, _)| {
                m.run_until(limit);
            });
        let mut newly = Vec::new();
        for (i, m) in self.machines.iter().enumerate() {
            if self.live[i] && m.halted() {
                self.live[i] = false;
                newly.push(i);
            }
        }
        if limit == self.budget {
            self.finished = true;
        }
        self.limit = self.limit.saturating_mul(2);
        Some(newly)
    }
}

fn weight(program: &ToyProgram) -> Dyadic {
    Dyadic::pow2_neg(program.length())
}

fn check_budget(budget: u64) -> Result<()> {
    if budget == 0 {
        return Err(Error::InvalidArgument("step budget must be at least 1".into()));
    }
    Ok(())
}

/// Dovetails an explicit program set; `max_len` of the ledger is the
/// longest program supplied.
pub fn dovetail_programs(programs: &[ToyProgram], budget: u64) -> Result<OmegaLedger> {
    check_budget(budget)?;
    let mut dt = Dovetailer::new(programs, budget);
    let mut halted_idx = Vec::new();
    while let Some(newly) = dt.round() {
        halted_idx.extend(newly);
    }
    halted_idx.sort_unstable();
    let mut omega_bound = Dyadic::ZERO;
    let halted = halted_idx
        .into_iter()
        .map(|i| {
            omega_bound += weight(&programs[i]);
            let m = &dt.machines[i];
            HaltedEntry {
                program: programs[i].clone(),
                steps: m.steps(),
                output: m.output().clone(),
            }
        })
        .collect();
    Ok(OmegaLedger {
        omega_bound,
        halted,
        max_len: programs.iter().map(ToyProgram::length).max().unwrap_or(0),
        budget,
    })
}

/// Exact halting probability of the budget-bounded machine over all
/// programs of at most `max_len` bits.
pub fn dovetail_run(max_len: u32, budget: u64) -> Result<OmegaLedger> {
    let programs = enumerate_programs(max_len)?;
    let mut ledger = dovetail_programs(&programs, budget)?;
    ledger.max_len = max_len;
    Ok(ledger)
}

/// Sum of `2^-l` over every program of at most `max_len` bits.
pub fn kraft_sum(max_len: u32) -> Result<Dyadic> {
    Ok(enumerate_programs(max_len)?
        .iter()
        .fold(Dyadic::ZERO, |acc, p| acc + weight(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltingVerdict {
    Halts,
    NeverHalts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRoute {
    /// The program was seen to halt.
    ObservedHalt,
    /// The accumulated weight exceeded `omega - 2^-l(pi0)`.
    OmegaThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingDecision {
    pub verdict: HaltingVerdict,
    pub route: DecisionRoute,
    pub accumulated: Dyadic,
    pub rounds: u32,
}

/// Decides whether `pi0` halts given the exact `omega` of the machine with
/// parameters `(max_len, budget)`.
///
/// All programs are dovetailed; the answer is `Halts` once `pi0` halts and
/// `NeverHalts` once the weight of the halted programs exceeds
/// `omega - 2^-l(pi0)`. An `omega` that the accumulation overshoots, or
/// never reaches, is reported as an integrity failure.
pub fn halting_decision(
    pi0: &ToyProgram,
    omega: Dyadic,
    max_len: u32,
    budget: u64,
) -> Result<HaltingDecision> {
    check_budget(budget)?;
    if pi0.length() > max_len {
        return Err(Error::InvalidArgument(format!(
            "program of {} bits is outside max_len {max_len}",
            pi0.length()
        )));
    }
    let programs = enumerate_programs(max_len)?;
    let target = programs
        .iter()
        .position(|p| p == pi0)
        .ok_or_else(|| Error::InvalidProgram("program not in the enumeration".into()))?;
    let w0 = weight(pi0);
    let mut accumulated = Dyadic::ZERO;
    let mut rounds = 0;

    let threshold_crossed = |acc: Dyadic| acc + w0 > omega;
    if threshold_crossed(accumulated) {
        return Ok(HaltingDecision {
            verdict: HaltingVerdict::NeverHalts,
            route: DecisionRoute::OmegaThreshold,
            accumulated,
            rounds,
        });
    }

    let mut dt = Dovetailer::new(&programs, budget);
    while let Some(newly) = dt.round() {
        rounds += 1;
        for i in newly {
            accumulated += weight(&programs[i]);
            if accumulated > omega {
                return Err(Error::OmegaIntegrity(format!(
                    "halted weight {accumulated} exceeds the supplied omega {omega}"
                )));
            }
            if i == target {
                return Ok(HaltingDecision {
                    verdict: HaltingVerdict::Halts,
                    route: DecisionRoute::ObservedHalt,
                    accumulated,
                    rounds,
                });
            }
            if threshold_crossed(accumulated) {
                return Ok(HaltingDecision {
                    verdict: HaltingVerdict::NeverHalts,
                    route: DecisionRoute::OmegaThreshold,
                    accumulated,
                    rounds,
                });
            }
        }
    }
    Err(Error::OmegaIntegrity(format!(
        "dovetailing finished at {accumulated} without reaching the supplied omega {omega}"
    )))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaVerdict {
    /// Produced by `program`, whose length is within the bit budget.
    Compressible { program: ToyProgram },
    Incompressible,
}

impl OmegaVerdict {
    pub fn is_compressible(&self) -> bool {
        matches!(self, OmegaVerdict::Compressible { .. })
    }
}

/// Is `s` the output of some halting program of at most
/// `program_budget_bits` bits?
///
/// All programs up to `ledger.max_len` are dovetailed until the halted
/// weight equals `ledger.omega_bound`, at which point every program that
/// will ever halt has done so, and the short ones are checked for `s`.
pub fn compressible_via_omega(
    s: &BitString,
    program_budget_bits: u32,
    ledger: &OmegaLedger,
) -> Result<OmegaVerdict> {
    if program_budget_bits > ledger.max_len {
        return Err(Error::InvalidArgument(format!(
            "program budget {program_budget_bits} exceeds ledger max_len {}",
            ledger.max_len
        )));
    }
    check_budget(ledger.budget)?;
    let omega = ledger.omega_bound;
    if omega.is_zero() {
        return Ok(OmegaVerdict::Incompressible);
    }
    let programs = enumerate_programs(ledger.max_len)?;
    let mut dt = Dovetailer::new(&programs, ledger.budget);
    let mut accumulated = Dyadic::ZERO;
    while let Some(newly) = dt.round() {
        for i in newly {
            let p = &programs[i];
            accumulated += weight(p);
            if accumulated > omega {
                return Err(Error::OmegaIntegrity(format!(
                    "halted weight {accumulated} exceeds the ledger omega {omega}"
                )));
            }
            if p.length() <= program_budget_bits && dt.machines[i].output() == s {
                return Ok(OmegaVerdict::Compressible { program: p.clone() });
            }
            if accumulated == omega {
                return Ok(OmegaVerdict::Incompressible);
            }
        }
    }
    Err(Error::OmegaIntegrity(format!(
        "dovetailing finished at {accumulated} without reaching the ledger omega {omega}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::{run_program, Opcode::*, RunStatus};

    fn prog(ops: &[crate::omega::Opcode]) -> ToyProgram {
        ToyProgram::from_ops(ops).unwrap()
    }

    #[test]
    fn empty_scope_has_zero_omega() {
        let ledger = dovetail_run(4, 100).unwrap();
        assert!(ledger.halted.is_empty());
        assert_eq!(ledger.omega_bound, Dyadic::ZERO);
        assert!(dovetail_run(16, 0).is_err());
    }

    #[test]
    fn budget_below_every_halting_time() {
        let slow = [prog(&[Inc, Inc, Halt]), prog(&[Nop, Nop, Nop]), prog(&[JmpBack2])];
        let ledger = dovetail_programs(&slow, 2).unwrap();
        assert_eq!(ledger.omega_bound, Dyadic::ZERO);
        let ledger = dovetail_programs(&slow, 3).unwrap();
        assert_eq!(ledger.omega_bound, Dyadic::pow2_neg(12));
    }

    #[test]
    fn single_halting_program_contributes_its_weight() {
        let ledger = dovetail_programs(&[prog(&[Out1])], 10).unwrap();
        assert_eq!(ledger.omega_bound, Dyadic::pow2_neg(5));
        assert_eq!(ledger.halted.len(), 1);
        assert_eq!(ledger.halted[0].output.to_ascii(), "1");
        let mut buf = Vec::new();
        ledger.write_export(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "10010,1,1\n");
    }

    #[test]
    fn ledger_matches_direct_simulation() {
        let budget = 10_000;
        let ledger = dovetail_run(13, budget).unwrap();
        let mut omega = Dyadic::ZERO;
        let mut halted = Vec::new();
        for p in enumerate_programs(13).unwrap() {
            let r = run_program(&p, budget);
            if r.status == RunStatus::Halted {
                omega += Dyadic::pow2_neg(p.length());
                halted.push(HaltedEntry { program: p, steps: r.steps, output: r.output });
            }
        }
        assert_eq!(ledger.omega_bound, omega);
        assert_eq!(ledger.halted, halted);
    }

    #[test]
    fn kraft_sums() {
        assert_eq!(kraft_sum(4).unwrap(), Dyadic::ZERO);
        assert_eq!(kraft_sum(5).unwrap(), Dyadic::pow2_neg(2));
        // 8^L programs of 4L+1 bits contribute 2^-(L+1) per L
        assert_eq!(kraft_sum(28).unwrap(), Dyadic::new(63, 7));
    }

    #[test]
    fn halting_decisions() {
        let (max_len, budget) = (9, 1000);
        let omega = dovetail_run(max_len, budget).unwrap().omega_bound;
        let d = halting_decision(&prog(&[Halt]), omega, max_len, budget).unwrap();
        assert_eq!((d.verdict, d.route), (HaltingVerdict::Halts, DecisionRoute::ObservedHalt));
        let d = halting_decision(&prog(&[JmpBack2]), omega, max_len, budget).unwrap();
        assert_eq!((d.verdict, d.route), (HaltingVerdict::NeverHalts, DecisionRoute::OmegaThreshold));
        // decided long before the loop could exhaust its budget
        assert!(d.rounds < 10);
        assert!(halting_decision(&prog(&[Halt, Halt, Halt]), omega, max_len, budget).is_err());
    }

    #[test]
    fn inconsistent_omega_is_flagged() {
        let (max_len, budget) = (9, 1000);
        let omega = dovetail_run(max_len, budget).unwrap().omega_bound;
        let high = omega + Dyadic::pow2_neg(9);
        // the tight loop must wait for every halting program
        assert!(matches!(
            halting_decision(&prog(&[Inc, JmpBack2]), high, max_len, budget),
            Err(Error::OmegaIntegrity(_))
        ));
        let mut ledger = dovetail_run(max_len, budget).unwrap();
        // not a multiple of 2^-9, so the accumulation steps over it
        ledger.omega_bound = omega.checked_sub(Dyadic::pow2_neg(10)).unwrap();
        let never = BitString::from_ascii("1111").unwrap();
        assert!(matches!(
            compressible_via_omega(&never, max_len, &ledger),
            Err(Error::OmegaIntegrity(_))
        ));
    }

    #[test]
    fn compressibility_via_omega() {
        let ledger = dovetail_run(13, 1000).unwrap();
        let s = BitString::from_ascii("101").unwrap();
        match compressible_via_omega(&s, 13, &ledger).unwrap() {
            OmegaVerdict::Compressible { program } => {
                assert_eq!(run_program(&program, 1000).output, s);
                assert!(program.length() <= 13);
            }
            v => panic!("{v:?}"),
        }
        // three instructions emit at most three bits
        let long = BitString::from_ascii("1010").unwrap();
        assert_eq!(compressible_via_omega(&long, 13, &ledger).unwrap(), OmegaVerdict::Incompressible);
        // "101" needs three instructions, i.e. 13 bits
        assert_eq!(compressible_via_omega(&s, 9, &ledger).unwrap(), OmegaVerdict::Incompressible);
        assert!(compressible_via_omega(&s, 14, &ledger).is_err());
    }
}
