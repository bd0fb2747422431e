//! Finite laboratory for evaluation batteries.
//!
//! Agents are finite-support distributions over traces, scorers map traces
//! into `[0, 1]`, and batteries bundle scored tasks with sampling weights and
//! resource coordinates. On top of those objects the crate provides:
//!
//! * the evaluation pseudometric over an agent class and the constructive
//!   finite-support / code-algebra approximation of scorers ([`scorer`]),
//! * a fuel-bounded stack machine that grades program traces ([`code`]),
//! * a small equational proof kernel with libraries ([`kernel`]),
//! * evaluation laws, a Lipschitz capability functional and the
//!   bounded-Lipschitz distance solved as a linear program ([`battery`], [`lp`]),
//! * Generator-Verifier-Updater flows with oracle and noisy verifiers ([`gvu`]),
//! * scenario files, report rows and command orchestration ([`lab`]).

pub mod agent;
pub mod battery;
pub mod code;
pub mod gvu;
pub mod kernel;
pub mod lab;
pub mod lp;
pub mod par;
pub mod random;
pub mod rng;
pub mod scorer;
pub mod trace;

pub use agent::{Agent, AgentClass, AgentPolicy, TaskPolicy, TightnessCertificate};
pub use battery::{AaiSpec, Battery, EvalPoint, EvaluationLaw, Task};
pub use scorer::{Polynomial, Scorer};
pub use trace::{Alphabet, FiniteSupportFn, Trace};
