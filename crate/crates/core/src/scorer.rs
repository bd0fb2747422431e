//! One-shot scorers, the math+code algebra, the evaluation pseudometric
//! over an agent class, and the constructive approximation results built on
//! top of it.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use thiserror::Error;

use crate::agent::{tightness_core, Agent, AgentClass, AgentError, TightnessCertificate};
use crate::code::{code_eval, CodeProblem};
use crate::kernel::{kernel_check, Library, MathTask, Theorem};
use crate::par;
use crate::rng;
use crate::trace::{fs_truncate, FiniteSupportFn, Trace, TraceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorerError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("tolerance {0} must be positive")]
    BadEpsilon(f64),
    #[error("polynomial term has {found} exponents for {arity} arguments")]
    ArityMismatch { arity: usize, found: usize },
    #[error("witness invalid: {trace:?} is accepted as a proof of {theorem:?}")]
    WitnessAccepted { trace: String, theorem: String },
    #[error("witness invalid: class lacks the point mass at {0:?}")]
    WitnessMissingAgent(String),
    #[error("witness invalid: the two traces must differ")]
    WitnessNotDistinct,
    #[error("witness needs at least one theorem")]
    NoTheorems,
}

/// One monomial `coef · Π x_i^{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// A real polynomial in a fixed number of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    arity: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self, ScorerError> {
        for t in &terms {
            if t.exps.len() != arity {
                return Err(ScorerError::ArityMismatch {
                    arity,
                    found: t.exps.len(),
                });
            }
        }
        Ok(Self { arity, terms })
    }

    /// `Σ_i c_i x_i`.
    pub fn linear(coefs: &[f64]) -> Self {
        let n = coefs.len();
        let terms = coefs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut exps = vec![0; n];
                exps[i] = 1;
                Monomial { coef: c, exps }
            })
            .collect();
        Self { arity: n, terms }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.exps.iter().zip(xs).fold(t.coef, |acc, (&e, &x)| {
                    if e == 0 {
                        acc
                    } else {
                        acc * x.powi(e as i32)
                    }
                })
            })
            .sum()
    }
}

/// A total map from traces to the reals.
///
/// Every variant except `Poly` maps into `[0, 1]`. `Poly` keeps its raw
/// value so algebra identities can be tested; batteries clamp it.
#[derive(Debug, Clone, PartialEq)]
pub enum Scorer {
    Table(FiniteSupportFn),
    ExactMatch(Trace),
    Code(Arc<CodeProblem>),
    Math(MathTask),
    Poly(Polynomial, Vec<Scorer>),
    Const(f64),
}

impl Scorer {
    pub fn poly(p: Polynomial, args: Vec<Scorer>) -> Result<Scorer, ScorerError> {
        if p.arity() != args.len() {
            return Err(ScorerError::ArityMismatch {
                arity: args.len(),
                found: p.arity(),
            });
        }
        Ok(Scorer::Poly(p, args))
    }

    pub fn math(library: Arc<Library>, goal: Theorem) -> Scorer {
        Scorer::Math(MathTask { library, goal })
    }

    /// Raw value; `Poly` is not clamped.
    pub fn score(&self, trace: &Trace) -> f64 {
        match self {
            Scorer::Table(f) => f.eval(trace),
            Scorer::ExactMatch(target) => {
                if trace == target {
                    1.0
                } else {
                    0.0
                }
            }
            Scorer::Code(problem) => code_eval(problem, trace),
            Scorer::Math(task) => task.score(trace),
            Scorer::Poly(p, args) => {
                let xs: Vec<f64> = args.iter().map(|s| s.score(trace)).collect();
                p.eval(&xs)
            }
            Scorer::Const(c) => *c,
        }
    }

    /// Value as installed in a battery: clamped to `[0, 1]`.
    pub fn score_clamped(&self, trace: &Trace) -> f64 {
        self.score(trace).clamp(0.0, 1.0)
    }

    /// True when the scorer is built only from math tasks and constants.
    pub fn is_pure_math(&self) -> bool {
        match self {
            Scorer::Math(_) | Scorer::Const(_) => true,
            Scorer::Poly(_, args) => args.iter().all(Scorer::is_pure_math),
            _ => false,
        }
    }

    /// True when the scorer is built only from coding primitives and constants.
    pub fn is_code_algebra(&self) -> bool {
        match self {
            Scorer::Code(_) | Scorer::ExactMatch(_) | Scorer::Const(_) => true,
            Scorer::Poly(_, args) => args.iter().all(Scorer::is_code_algebra),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scorer::Table(_) => "table",
            Scorer::ExactMatch(_) => "exact_match",
            Scorer::Code(_) => "code",
            Scorer::Math(_) => "math",
            Scorer::Poly(..) => "poly",
            Scorer::Const(_) => "const",
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scorer::Table(t) => write!(f, "table[{}]", t.len()),
            Scorer::ExactMatch(t) => write!(f, "match({t:?})"),
            Scorer::Code(p) => write!(f, "code({})", p.id()),
            Scorer::Math(m) => write!(f, "math({}@{})", m.goal.id(), m.library.id()),
            Scorer::Poly(p, args) => write!(f, "poly(deg {}, {} args)", p.degree(), args.len()),
            Scorer::Const(c) => write!(f, "const({c})"),
        }
    }
}

/// A single scorer seen as a battery.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotBattery {
    pub label: String,
    pub scorer: Scorer,
}

/// `F_f(P) = E_{ω∼P}[f(ω)]`.
pub fn capability(battery: &OneShotBattery, agent: &Agent) -> f64 {
    agent.expectation(|t| battery.scorer.score(t))
}

/// A worst-case discrepancy over a class and the agent attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    pub agent_index: usize,
}

/// `max_P |Σ_ω P(ω)(f(ω) − g(ω))|` over two score functions.
///
/// The per-agent gap is computed as the expectation of the pointwise
/// difference, so traces where `f` and `g` agree contribute an exact zero.
pub fn class_discrepancy<F, G>(class: &AgentClass, f: F, g: G) -> Discrepancy
where
    F: Fn(&Trace) -> f64 + Sync + Send,
    G: Fn(&Trace) -> f64 + Sync + Send,
{
    let gaps = par::map(class.agents(), |a| a.expectation(|t| f(t) - g(t)).abs());
    let (agent_index, value) =
        gaps.into_iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    Discrepancy { value, agent_index }
}

/// `d_𝒜(f, g) = max_{P∈𝒜} |F_f(P) − F_g(P)|`.
pub fn evaluation_distance(f: &Scorer, g: &Scorer, class: &AgentClass) -> Discrepancy {
    class_discrepancy(class, |t| f.score(t), |t| g.score(t))
}

/// `1{ω = ω₀}`, realized as a coding task that compares strings statically.
pub fn delta_scorer(target: Trace) -> Scorer {
    Scorer::Code(Arc::new(CodeProblem::static_match(target)))
}

/// Restriction of `f` to a tightness core of `class` at level `eps`.
pub fn approx_on_core<F>(
    f: F,
    class: &AgentClass,
    eps: f64,
) -> Result<(FiniteSupportFn, TightnessCertificate), ScorerError>
where
    F: Fn(&Trace) -> f64,
{
    if !(eps > 0.0) {
        return Err(ScorerError::BadEpsilon(eps));
    }
    let cert = tightness_core(class, eps.min(1.0))?;
    let table = fs_truncate(f, &cert.core)?;
    Ok((table, cert))
}

/// Finite-support approximation under uniform tightness.
///
/// Returns a table `g`, equal to `f` on a core carrying all but
/// `attained_tail ≤ eps` of every agent's mass, and zero elsewhere. For
/// `f` with values in `[0, 1]` this gives `d_𝒜(f, g) ≤ attained_tail`.
pub fn finite_support_approx(
    f: &Scorer,
    class: &AgentClass,
    eps: f64,
) -> Result<(Scorer, TightnessCertificate), ScorerError> {
    let (table, cert) = approx_on_core(|t| f.score(t), class, eps)?;
    Ok((Scorer::Table(table), cert))
}

/// Rewrites a finite-support table as `Σ_j a_j · δ(ω_j)` over coding
/// delta scorers. The empty table becomes `Const(0)`.
pub fn express_in_code_algebra(g: &FiniteSupportFn) -> Scorer {
    if g.is_empty() {
        return Scorer::Const(0.0);
    }
    let (coefs, args): (Vec<f64>, Vec<Scorer>) = g
        .entries()
        .map(|(t, v)| (v, delta_scorer(t.clone())))
        .unzip();
    Scorer::Poly(Polynomial::linear(&coefs), args)
}

/// Shape of random pure-math algebra elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathAlgebraSampler {
    pub max_degree: u32,
    pub max_args: usize,
    pub max_terms: usize,
}

impl Default for MathAlgebraSampler {
    fn default() -> Self {
        Self {
            max_degree: 3,
            max_args: 4,
            max_terms: 6,
        }
    }
}

impl MathAlgebraSampler {
    /// A random polynomial over random math-task scorers, coefficients
    /// uniform in `[-1, 1]`.
    pub fn sample(
        &self,
        library: &Arc<Library>,
        theorems: &[Theorem],
        rng: &mut rng::Rng,
    ) -> Scorer {
        let k = rng.gen_range(1..=self.max_args);
        let args: Vec<Scorer> = (0..k)
            .map(|_| {
                let th = &theorems[rng.gen_range(0..theorems.len())];
                Scorer::math(library.clone(), th.clone())
            })
            .collect();
        let n_terms = rng.gen_range(1..=self.max_terms);
        let terms = (0..n_terms)
            .map(|_| {
                let mut exps = vec![0u32; k];
                let deg = rng.gen_range(0..=self.max_degree);
                for _ in 0..deg {
                    exps[rng.gen_range(0..k)] += 1;
                }
                Monomial {
                    coef: rng.gen_range(-1.0..=1.0),
                    exps,
                }
            })
            .collect();
        Scorer::Poly(Polynomial { arity: k, terms }, args)
    }
}

/// Result of the mathematics non-density scan.
#[derive(Debug, Clone, PartialEq)]
pub struct NonDensityReport {
    pub samples: usize,
    /// Samples with `g(ω₁) = g(ω₂)` bit for bit.
    pub invariant_holds: usize,
    /// Samples with `d_𝒜(f, g) ≥ 1/2`.
    pub bound_holds: usize,
    pub min_distance: f64,
    /// Sample index attaining the minimum.
    pub argmin: usize,
}

impl NonDensityReport {
    pub fn passed(&self) -> bool {
        self.invariant_holds == self.samples && self.bound_holds == self.samples
    }
}

/// The target of the non-density argument: 1 at `w2`, 0 elsewhere.
pub fn nondensity_target(w2: &Trace) -> Result<Scorer, ScorerError> {
    Ok(Scorer::Table(FiniteSupportFn::new([(w2.clone(), 1.0)])?))
}

/// Scans random pure-math algebra elements against the two-point target.
///
/// `w1` and `w2` must be rejected as proofs of every theorem in
/// `theorems`, and `class` must contain both point masses. Each sample is
/// drawn from its own keyed stream, so the result does not depend on the
/// worker count.
pub fn math_nondensity_witness(
    library: &Arc<Library>,
    theorems: &[Theorem],
    witnesses: (&Trace, &Trace),
    class: &AgentClass,
    samples: usize,
    seed: u64,
) -> Result<NonDensityReport, ScorerError> {
    let (w1, w2) = witnesses;
    if theorems.is_empty() {
        return Err(ScorerError::NoTheorems);
    }
    if w1 == w2 {
        return Err(ScorerError::WitnessNotDistinct);
    }
    for w in [w1, w2] {
        if let Some(th) = theorems.iter().find(|th| kernel_check(library, th, w)) {
            return Err(ScorerError::WitnessAccepted {
                trace: w.as_str().to_string(),
                theorem: th.id().to_string(),
            });
        }
        let dirac = Agent::point_mass(w.clone());
        if !class.agents().contains(&dirac) {
            return Err(ScorerError::WitnessMissingAgent(w.as_str().to_string()));
        }
    }
    let target = nondensity_target(w2)?;
    let sampler = MathAlgebraSampler::default();
    let rows = par::map_range(samples, |i| {
        let mut r = rng::keyed(seed, &[i as u64]);
        let g = sampler.sample(library, theorems, &mut r);
        let same = g.score(w1).to_bits() == g.score(w2).to_bits();
        let d = evaluation_distance(&target, &g, class).value;
        (same, d)
    });
    let mut report = NonDensityReport {
        samples,
        invariant_holds: 0,
        bound_holds: 0,
        min_distance: f64::INFINITY,
        argmin: 0,
    };
    for (i, (same, d)) in rows.into_iter().enumerate() {
        report.invariant_holds += same as usize;
        report.bound_holds += (d >= 0.5) as usize;
        if d < report.min_distance {
            report.min_distance = d;
            report.argmin = i;
        }
    }
    Ok(report)
}
