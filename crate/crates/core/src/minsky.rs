//! Two-counter machines and their weak simulation by a weighted counter
//! system.
//!
//! The construction turns a deterministic two-counter machine into a PVASS
//! whose runs simulate the machine faithfully except at zero tests: when the
//! tested counter is nonzero the system may wrongly take the zero branch,
//! and only then can it fall into the absorbing `err` control state. The
//! weight of the wrong branch is a parameter, so the error probability can
//! be tuned; with weight ratio `x`, a machine that accepts within `L` zero
//! tests reaches `err` with probability at most `1 - 1/(1+x)^L`, while a
//! machine that keeps testing nonzero counters forever reaches `err` with
//! probability at least `1/2`.

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::pvass::{Marking, Pvass, PvassTarget, PvassTransition};
use crate::rational::Rational;

/// Instruction of a two-counter machine. Control states are instruction
/// indices; the accepting state is the index one past the last instruction
/// or any index without an instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    /// Increment `counter` and jump to `goto`.
    Inc { counter: usize, goto: usize },
    /// If `counter` is zero jump to `if_zero`, otherwise decrement it and
    /// jump to `else_goto`.
    TestDec {
        counter: usize,
        if_zero: usize,
        else_goto: usize,
    },
}

/// A deterministic two-counter machine with counters initially zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoCounterMachine {
    pub instrs: Vec<Instr>,
    pub initial: usize,
    pub accept: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("counter index {0} out of range (machine has two counters)")]
    BadCounter(usize),
    #[error("jump target {0} out of range")]
    BadJump(usize),
    #[error("weight parameter must be positive")]
    BadWeight,
}

impl TwoCounterMachine {
    /// Number of control states: instruction indices plus the accept state.
    fn control_count(&self) -> usize {
        self.instrs.len().max(self.accept.max(self.initial)) + 1
    }

    fn check(&self) -> Result<(), ProgramError> {
        let n = self.control_count();
        for instr in &self.instrs {
            match instr {
                Instr::Inc { counter, goto } => {
                    if *counter > 1 {
                        return Err(ProgramError::BadCounter(*counter));
                    }
                    if *goto >= n {
                        return Err(ProgramError::BadJump(*goto));
                    }
                }
                Instr::TestDec {
                    counter,
                    if_zero,
                    else_goto,
                } => {
                    if *counter > 1 {
                        return Err(ProgramError::BadCounter(*counter));
                    }
                    if *if_zero >= n || *else_goto >= n {
                        return Err(ProgramError::BadJump(*if_zero.max(else_goto)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Result of [`build_gadget`]: the weighted counter system plus the `err`
/// control index and a ready-made target for the error states.
#[derive(Debug, Clone)]
pub struct MinskyGadget {
    pub pvass: Pvass,
    pub err_control: usize,
    pub err_target: PvassTarget,
}

/// Weakly simulates `program` as a weighted counter system.
///
/// `x` is the weight ratio of the wrong zero branch against the faithful
/// decrement branch at a test instruction; it is realized exactly by giving
/// the zero branch weight `numer(x)` and the decrement branch weight
/// `denom(x)`. Intermediate confirmation states are created per test
/// instruction; from there a weight-1 step either resumes the simulation
/// or, when the tested counter is nonzero, decrements it and falls into
/// the absorbing `err` state. The accept and `err` states carry weight-1
/// self-loops.
pub fn build_gadget(program: &TwoCounterMachine, x: &Rational) -> Result<MinskyGadget, ProgramError> {
    program.check()?;
    if x <= &Rational::new(0.into(), 1.into()) {
        return Err(ProgramError::BadWeight);
    }
    let beta_weight = x
        .numer()
        .to_u64()
        .filter(|w| *w > 0)
        .ok_or(ProgramError::BadWeight)?;
    let alpha_weight = x
        .denom()
        .to_u64()
        .filter(|w| *w > 0)
        .ok_or(ProgramError::BadWeight)?;

    let base = program.control_count();
    let mut names: Vec<String> = (0..base).map(|k| format!("k{k}")).collect();
    names[program.accept] = "k_acc".into();
    let mut transitions = Vec::new();
    let mut confirm_states: Vec<(usize, usize, usize)> = Vec::new(); // (name idx, goto, counter)

    let op = |counter: usize, delta: i8| {
        let mut op = vec![0i8; 2];
        op[counter] = delta;
        op
    };

    for (k, instr) in program.instrs.iter().enumerate() {
        match instr {
            Instr::Inc { counter, goto } => {
                transitions.push(PvassTransition {
                    src: k,
                    op: op(*counter, 1),
                    dst: *goto,
                    weight: 1,
                });
            }
            Instr::TestDec {
                counter,
                if_zero,
                else_goto,
            } => {
                // Faithful decrement branch.
                transitions.push(PvassTransition {
                    src: k,
                    op: op(*counter, -1),
                    dst: *else_goto,
                    weight: alpha_weight,
                });
                // Zero branch via a confirmation state.
                let confirm = names.len();
                names.push(format!("k{if_zero}^{}", counter + 1));
                confirm_states.push((confirm, *if_zero, *counter));
                transitions.push(PvassTransition {
                    src: k,
                    op: vec![0, 0],
                    dst: confirm,
                    weight: beta_weight,
                });
            }
        }
    }
    for (confirm, goto, counter) in confirm_states {
        // Resume the simulation...
        transitions.push(PvassTransition {
            src: confirm,
            op: vec![0, 0],
            dst: goto,
            weight: 1,
        });
        // ...or expose the unfaithful guess: possible only if the counter
        // was nonzero after all.
        transitions.push(PvassTransition {
            src: confirm,
            op: op(counter, -1),
            dst: names.len(), // err, appended below
            weight: 1,
        });
    }
    let err_control = names.len();
    names.push("err".into());
    transitions.push(PvassTransition {
        src: err_control,
        op: vec![0, 0],
        dst: err_control,
        weight: 1,
    });

    let pvass = Pvass {
        control_names: names,
        var_names: vec!["c1".into(), "c2".into()],
        transitions,
        initial: Marking::new(program.initial, vec![0, 0]),
    }
    .validate(true)
    .expect("gadget construction yields a well-formed system");

    Ok(MinskyGadget {
        pvass,
        err_control,
        err_target: PvassTarget::QStates(vec![err_control]),
    })
}

/// The machine that accepts immediately: initial state is the accept state.
pub fn immediate_accept() -> TwoCounterMachine {
    TwoCounterMachine {
        instrs: vec![],
        initial: 0,
        accept: 0,
    }
}

/// A machine that never accepts and tests a nonzero counter forever:
/// increment `c1`, test it (always nonzero), decrement, repeat.
pub fn looping_tester() -> TwoCounterMachine {
    TwoCounterMachine {
        instrs: vec![
            Instr::Inc { counter: 0, goto: 1 },
            Instr::TestDec {
                counter: 0,
                if_zero: 0,
                else_goto: 0,
            },
        ],
        initial: 0,
        accept: 2,
    }
}
