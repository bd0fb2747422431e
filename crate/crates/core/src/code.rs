//! The coding fiber: a fuel-bounded stack machine and a test-suite grader.
//!
//! Program text is a whitespace-separated sequence of mnemonics:
//!
//! ```text
//! PUSH <i64> | POP | ADD | SUB | MUL | DUP | SWAP
//! JMPZ <target> | JMP <target> | IN | OUT | HALT
//! ```
//!
//! Jump targets are absolute instruction indices and must address an
//! instruction of the program. Cells are 64-bit wrapping integers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::Trace;

pub const DEFAULT_FUEL: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Push(i64),
    Pop,
    Add,
    Sub,
    Mul,
    Dup,
    Swap,
    /// Pops the top of the stack and jumps when it is zero.
    Jmpz(usize),
    Jmp(usize),
    /// Pushes the next input value, or 0 once the input is exhausted.
    In,
    /// Pops the top of the stack onto the output.
    Out,
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    instrs: Vec<Instr>,
}

impl Program {
    pub fn instructions(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.instrs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match ins {
                Instr::Push(k) => write!(f, "PUSH {k}")?,
                Instr::Pop => f.write_str("POP")?,
                Instr::Add => f.write_str("ADD")?,
                Instr::Sub => f.write_str("SUB")?,
                Instr::Mul => f.write_str("MUL")?,
                Instr::Dup => f.write_str("DUP")?,
                Instr::Swap => f.write_str("SWAP")?,
                Instr::Jmpz(t) => write!(f, "JMPZ {t}")?,
                Instr::Jmp(t) => write!(f, "JMP {t}")?,
                Instr::In => f.write_str("IN")?,
                Instr::Out => f.write_str("OUT")?,
                Instr::Halt => f.write_str("HALT")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFailure {
    #[error("empty program")]
    Empty,
    #[error("unknown mnemonic {0:?}")]
    UnknownMnemonic(String),
    #[error("{0} expects an operand")]
    MissingOperand(&'static str),
    #[error("bad operand {0:?}")]
    BadOperand(String),
    #[error("jump target {target} out of range for a {len}-instruction program")]
    TargetOutOfRange { target: usize, len: usize },
}

/// Parses program text. Failures are ordinary values.
pub fn parse_program(src: &str) -> Result<Program, ParseFailure> {
    let mut toks = src.split_whitespace();
    let mut instrs = Vec::new();
    while let Some(tok) = toks.next() {
        let ins = match tok {
            "PUSH" => {
                let arg = toks.next().ok_or(ParseFailure::MissingOperand("PUSH"))?;
                Instr::Push(
                    arg.parse()
                        .map_err(|_| ParseFailure::BadOperand(arg.to_string()))?,
                )
            }
            "JMPZ" | "JMP" => {
                let name = if tok == "JMP" { "JMP" } else { "JMPZ" };
                let arg = toks.next().ok_or(ParseFailure::MissingOperand(name))?;
                let target: usize = arg
                    .parse()
                    .map_err(|_| ParseFailure::BadOperand(arg.to_string()))?;
                if tok == "JMP" {
                    Instr::Jmp(target)
                } else {
                    Instr::Jmpz(target)
                }
            }
            "POP" => Instr::Pop,
            "ADD" => Instr::Add,
            "SUB" => Instr::Sub,
            "MUL" => Instr::Mul,
            "DUP" => Instr::Dup,
            "SWAP" => Instr::Swap,
            "IN" => Instr::In,
            "OUT" => Instr::Out,
            "HALT" => Instr::Halt,
            other => return Err(ParseFailure::UnknownMnemonic(other.to_string())),
        };
        instrs.push(ins);
    }
    if instrs.is_empty() {
        return Err(ParseFailure::Empty);
    }
    let len = instrs.len();
    for ins in &instrs {
        if let Instr::Jmp(t) | Instr::Jmpz(t) = *ins {
            if t >= len {
                return Err(ParseFailure::TargetOutOfRange { target: t, len });
            }
        }
    }
    Ok(Program { instrs })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub output: Vec<i64>,
    /// True only when a `HALT` instruction was executed.
    pub halted: bool,
    pub fuel_used: u64,
}

/// Small-step execution. Each executed instruction costs one unit of fuel.
/// Runs end at `HALT`, on stack underflow, when fuel is exhausted, or when
/// control falls off the end; only the first counts as halted.
pub fn run_program(program: &Program, input: &[i64], fuel: u64) -> RunOutcome {
    let code = &program.instrs;
    let mut stack: Vec<i64> = Vec::new();
    let mut output = Vec::new();
    let mut pc = 0usize;
    let mut next_in = 0usize;
    let mut used = 0u64;
    let finish = |output, halted, used| RunOutcome {
        output,
        halted,
        fuel_used: used,
    };
    while pc < code.len() {
        if used == fuel {
            return finish(output, false, used);
        }
        used += 1;
        let mut next = pc + 1;
        match code[pc] {
            Instr::Push(k) => stack.push(k),
            Instr::Pop => {
                if stack.pop().is_none() {
                    return finish(output, false, used);
                }
            }
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Swap => {
                let (Some(b), Some(a)) = (stack.pop(), stack.pop()) else {
                    return finish(output, false, used);
                };
                match code[pc] {
                    Instr::Add => stack.push(a.wrapping_add(b)),
                    Instr::Sub => stack.push(a.wrapping_sub(b)),
                    Instr::Mul => stack.push(a.wrapping_mul(b)),
                    _ => {
                        stack.push(b);
                        stack.push(a);
                    }
                }
            }
            Instr::Dup => match stack.last() {
                Some(&v) => stack.push(v),
                None => return finish(output, false, used),
            },
            Instr::Jmpz(t) => match stack.pop() {
                Some(0) => next = t,
                Some(_) => {}
                None => return finish(output, false, used),
            },
            Instr::Jmp(t) => next = t,
            Instr::In => {
                stack.push(input.get(next_in).copied().unwrap_or(0));
                next_in += 1;
            }
            Instr::Out => match stack.pop() {
                Some(v) => output.push(v),
                None => return finish(output, false, used),
            },
            Instr::Halt => return finish(output, true, used),
        }
        pc = next;
    }
    finish(output, false, used)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    AllOrNothing,
    FractionPassing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: Vec<i64>,
    pub expected: Vec<i64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("code problem {0:?} has neither tests nor a static check")]
    NoTests(String),
    #[error("code problem {0:?} needs fuel of at least 1")]
    ZeroFuel(String),
}

/// A coding task: a validation suite and its grading rule, or a static
/// exact-match check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeProblem {
    id: String,
    tests: Vec<TestCase>,
    fuel: u64,
    grading: Grading,
    static_check: Option<Trace>,
}

impl CodeProblem {
    pub fn new(
        id: impl Into<String>,
        tests: Vec<TestCase>,
        fuel: u64,
        grading: Grading,
    ) -> Result<Self, ProblemError> {
        let id = id.into();
        if tests.is_empty() {
            return Err(ProblemError::NoTests(id));
        }
        if fuel == 0 {
            return Err(ProblemError::ZeroFuel(id));
        }
        Ok(Self {
            id,
            tests,
            fuel,
            grading,
            static_check: None,
        })
    }

    /// The evaluator that accepts exactly one string, by static comparison.
    pub fn static_match(target: Trace) -> Self {
        Self {
            id: format!("match:{}", target.as_str()),
            tests: Vec::new(),
            fuel: 1,
            grading: Grading::AllOrNothing,
            static_check: Some(target),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn fuel(&self) -> u64 {
        self.fuel
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn static_check(&self) -> Option<&Trace> {
        self.static_check.as_ref()
    }
}

/// Grades a trace against a coding task. Total: every trace gets a score in
/// `[0, 1]`, parse failures and abnormal runs included.
pub fn code_eval(problem: &CodeProblem, trace: &Trace) -> f64 {
    if let Some(target) = &problem.static_check {
        return if trace == target { 1.0 } else { 0.0 };
    }
    let Ok(program) = parse_program(trace.as_str()) else {
        return 0.0;
    };
    let passed = problem
        .tests
        .iter()
        .filter(|tc| {
            let run = run_program(&program, &tc.input, problem.fuel);
            run.halted && run.output == tc.expected
        })
        .count();
    match problem.grading {
        Grading::AllOrNothing => {
            if passed == problem.tests.len() {
                1.0
            } else {
                0.0
            }
        }
        Grading::FractionPassing => passed as f64 / problem.tests.len() as f64,
    }
}
