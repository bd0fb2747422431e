//! The mathematics fiber: a toy equational kernel over `{0, s, +}`.
//!
//! Terms are written `0`, `s(t)`, `(t+u)` and identifiers. A proof script
//! is a sequence of directed rewrites, each terminated by `;`:
//!
//! ```text
//! STEP <rule> <LR|RL> <path> <bindings> ;
//! ```
//!
//! `<path>` is `root` or a dot-separated list of child indices (`0`, `1.0`),
//! `<bindings>` is `-` or a comma-separated list of `var:=term`. Every
//! variable of the rule must be bound; there is no unification. A script
//! proves a goal when rewriting the goal's left side step by step ends on
//! a term syntactically equal to its right side.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{Battery, BatteryError, Formality, Task};
use crate::rng::Rng;
use crate::scorer::Scorer;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Zero,
    Succ(Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Var(String),
}

impl Term {
    pub fn succ(t: Term) -> Term {
        Term::Succ(Box::new(t))
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    /// The numeral `s^n(0)`.
    pub fn numeral(n: usize) -> Term {
        (0..n).fold(Term::Zero, |t, _| Term::succ(t))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Zero => {}
            Term::Succ(t) => t.collect_vars(out),
            Term::Plus(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Var(v) => {
                out.insert(v.clone());
            }
        }
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(self);
        };
        match (self, first) {
            (Term::Succ(t), 0) => t.subterm(rest),
            (Term::Plus(a, _), 0) => a.subterm(rest),
            (Term::Plus(_, b), 1) => b.subterm(rest),
            _ => None,
        }
    }

    fn subterm_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(self);
        };
        match (self, first) {
            (Term::Succ(t), 0) => t.subterm_mut(rest),
            (Term::Plus(a, _), 0) => a.subterm_mut(rest),
            (Term::Plus(_, b), 1) => b.subterm_mut(rest),
            _ => None,
        }
    }

    /// Simultaneous substitution; unbound variables stay as they are.
    pub fn substitute(&self, subst: &[(String, Term)]) -> Term {
        match self {
            Term::Zero => Term::Zero,
            Term::Succ(t) => Term::succ(t.substitute(subst)),
            Term::Plus(a, b) => Term::plus(a.substitute(subst), b.substitute(subst)),
            Term::Var(v) => subst
                .iter()
                .find(|(name, _)| name == v)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
        }
    }

    /// Paths of every `+` node, in pre-order.
    fn plus_paths(&self, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match self {
            Term::Zero | Term::Var(_) => {}
            Term::Succ(t) => {
                prefix.push(0);
                t.plus_paths(prefix, out);
                prefix.pop();
            }
            Term::Plus(a, b) => {
                out.push(prefix.clone());
                prefix.push(0);
                a.plus_paths(prefix, out);
                prefix.pop();
                prefix.push(1);
                b.plus_paths(prefix, out);
                prefix.pop();
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => f.write_str("0"),
            Term::Succ(t) => write!(f, "s({t})"),
            Term::Plus(a, b) => write!(f, "({a}+{b})"),
            Term::Var(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("unexpected end of term")]
    UnexpectedEnd,
    #[error("unexpected character {found:?} at offset {offset}")]
    Unexpected { found: char, offset: usize },
    #[error("trailing input at offset {0}")]
    Trailing(usize),
}

struct TermParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TermParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), TermParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(TermParseError::Unexpected {
                found: x as char,
                offset: self.pos,
            }),
            None => Err(TermParseError::UnexpectedEnd),
        }
    }

    fn term(&mut self) -> Result<Term, TermParseError> {
        match self.peek() {
            None => Err(TermParseError::UnexpectedEnd),
            Some(b'0') => {
                self.pos += 1;
                Ok(Term::Zero)
            }
            Some(b'(') => {
                self.pos += 1;
                let a = self.term()?;
                self.expect(b'+')?;
                let b = self.term()?;
                self.expect(b')')?;
                Ok(Term::plus(a, b))
            }
            Some(c) if c.is_ascii_lowercase() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if name == "s" && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let t = self.term()?;
                    self.expect(b')')?;
                    Ok(Term::succ(t))
                } else {
                    Ok(Term::Var(name.to_string()))
                }
            }
            Some(c) => Err(TermParseError::Unexpected {
                found: c as char,
                offset: self.pos,
            }),
        }
    }
}

/// Parses a term written without whitespace.
pub fn parse_term(src: &str) -> Result<Term, TermParseError> {
    let mut p = TermParser {
        src: src.as_bytes(),
        pos: 0,
    };
    let t = p.term()?;
    if p.pos != src.len() {
        return Err(TermParseError::Trailing(p.pos));
    }
    Ok(t)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("term in {context}: {source}")]
    Term {
        context: String,
        source: TermParseError,
    },
    #[error("theorem {id:?} has free variables {missing:?} not listed as universal")]
    UnlistedVariables { id: String, missing: Vec<String> },
    #[error("lemma {0:?} is already in the library")]
    DuplicateLemma(String),
    #[error("lemma id {0:?} is reserved for an axiom")]
    ReservedId(String),
    #[error("proof of {lemma:?} rejected by the kernel against library {library:?}")]
    UnprovedLemma { lemma: String, library: String },
    #[error("library {small:?} is not included in {large:?}")]
    NotIncluded { small: String, large: String },
    #[error("goal {0:?} is malformed: {1}")]
    MalformedGoal(String, String),
}

/// A universally quantified equation `lhs = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Theorem {
    id: String,
    lhs: Term,
    rhs: Term,
    vars: Vec<String>,
}

impl Theorem {
    pub fn new(
        id: impl Into<String>,
        lhs: Term,
        rhs: Term,
        vars: Vec<String>,
    ) -> Result<Self, KernelError> {
        let id = id.into();
        let mut free = lhs.vars();
        free.extend(rhs.vars());
        let missing: Vec<String> = free.into_iter().filter(|v| !vars.contains(v)).collect();
        if !missing.is_empty() {
            return Err(KernelError::UnlistedVariables { id, missing });
        }
        Ok(Self { id, lhs, rhs, vars })
    }

    /// Parses both sides from text.
    pub fn parse(id: &str, lhs: &str, rhs: &str, vars: &[&str]) -> Result<Self, KernelError> {
        let side = |src: &str| {
            parse_term(src).map_err(|source| KernelError::Term {
                context: format!("theorem {id}"),
                source,
            })
        };
        Self::new(
            id,
            side(lhs)?,
            side(rhs)?,
            vars.iter().map(|v| v.to_string()).collect(),
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    fn same_statement(&self, other: &Theorem) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs && self.vars == other.vars
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} = {}", self.id, self.lhs, self.rhs)
    }
}

/// `A1: x+0 = x` and `A2: x+s(y) = s(x+y)`.
pub fn axioms() -> [Theorem; 2] {
    let x = || Term::var("x");
    let y = || Term::var("y");
    [
        Theorem {
            id: "A1".into(),
            lhs: Term::plus(x(), Term::Zero),
            rhs: x(),
            vars: vec!["x".into()],
        },
        Theorem {
            id: "A2".into(),
            lhs: Term::plus(x(), Term::succ(y())),
            rhs: Term::succ(Term::plus(x(), y())),
            vars: vec!["x".into(), "y".into()],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub theorem: Theorem,
    pub proof: Trace,
}

/// An immutable snapshot: the two axioms plus lemmas, each proved relative
/// to the entries before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    id: String,
    axioms: [Theorem; 2],
    lemmas: Vec<Lemma>,
}

impl Library {
    pub fn base(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            axioms: axioms(),
            lemmas: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn lemmas(&self) -> &[Lemma] {
        &self.lemmas
    }

    pub fn rule(&self, id: &str) -> Option<&Theorem> {
        self.axioms.iter().find(|a| a.id == id).or_else(|| {
            self.lemmas
                .iter()
                .find(|l| l.theorem.id == id)
                .map(|l| &l.theorem)
        })
    }

    pub fn contains_lemma(&self, id: &str) -> bool {
        self.lemmas.iter().any(|l| l.theorem.id == id)
    }

    /// Every lemma of `self` appears, with the same statement, in `other`.
    pub fn is_subset_of(&self, other: &Library) -> bool {
        self.lemmas.iter().all(|l| {
            other
                .rule(&l.theorem.id)
                .is_some_and(|t| t.same_statement(&l.theorem))
        })
    }

    /// Returns `self ∪ {theorem}` after the kernel accepts `proof`.
    /// The new snapshot is named `<id>+<lemma>`.
    pub fn extend(&self, theorem: Theorem, proof: Trace) -> Result<Library, KernelError> {
        if self.axioms.iter().any(|a| a.id == theorem.id) {
            return Err(KernelError::ReservedId(theorem.id));
        }
        if self.contains_lemma(&theorem.id) {
            return Err(KernelError::DuplicateLemma(theorem.id));
        }
        if !kernel_check(self, &theorem, &proof) {
            return Err(KernelError::UnprovedLemma {
                lemma: theorem.id,
                library: self.id.clone(),
            });
        }
        let mut next = self.clone();
        next.id = format!("{}+{}", self.id, theorem.id);
        next.lemmas.push(Lemma { theorem, proof });
        Ok(next)
    }

    /// Checks that a goal only mentions its declared variables. Every such
    /// goal is expressible over the fixed signature.
    pub fn check_goal(&self, goal: &Theorem) -> Result<(), KernelError> {
        Theorem::new(
            goal.id.clone(),
            goal.lhs.clone(),
            goal.rhs.clone(),
            goal.vars.clone(),
        )
        .map(|_| ())
        .map_err(|e| KernelError::MalformedGoal(goal.id.clone(), e.to_string()))
    }
}

/// `extend_library`.
pub fn extend_library(
    lib: &Library,
    theorem: Theorem,
    proof: Trace,
) -> Result<Library, KernelError> {
    lib.extend(theorem, proof)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lr,
    Rl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub rule: String,
    pub direction: Direction,
    pub path: Vec<usize>,
    pub bindings: Vec<(String, Term)>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Lr => "LR",
            Direction::Rl => "RL",
        };
        let path = if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(".")
        };
        let binds = if self.bindings.is_empty() {
            "-".to_string()
        } else {
            self.bindings
                .iter()
                .map(|(v, t)| format!("{v}:={t}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "STEP {} {dir} {path} {binds} ;", self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProofScript {
    pub steps: Vec<Step>,
}

impl ProofScript {
    pub fn to_trace(&self) -> Trace {
        Trace::new(
            self.steps
                .iter()
                .map(Step::to_string)
                .collect::<Vec<_>>()
                .join(" "),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptReject {
    #[error("expected STEP, found {0:?}")]
    ExpectedStep(String),
    #[error("truncated step")]
    Truncated,
    #[error("bad direction {0:?}")]
    BadDirection(String),
    #[error("bad path {0:?}")]
    BadPath(String),
    #[error("bad binding {0:?}")]
    BadBinding(String),
    #[error("expected ';', found {0:?}")]
    ExpectedSemicolon(String),
}

fn parse_path(tok: &str) -> Result<Vec<usize>, ScriptReject> {
    if tok == "root" {
        return Ok(Vec::new());
    }
    tok.split('.')
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| ScriptReject::BadPath(tok.to_string()))
        })
        .collect()
}

fn parse_bindings(tok: &str) -> Result<Vec<(String, Term)>, ScriptReject> {
    if tok == "-" {
        return Ok(Vec::new());
    }
    let bad = || ScriptReject::BadBinding(tok.to_string());
    let mut out: Vec<(String, Term)> = Vec::new();
    for part in tok.split(',') {
        let (name, term) = part.split_once(":=").ok_or_else(bad)?;
        let Ok(Term::Var(name)) = parse_term(name) else {
            return Err(bad());
        };
        if out.iter().any(|(n, _)| *n == name) {
            return Err(bad());
        }
        out.push((name, parse_term(term).map_err(|_| bad())?));
    }
    Ok(out)
}

/// Parses a proof script. The empty string is the empty script.
pub fn parse_script(src: &str) -> Result<ProofScript, ScriptReject> {
    let mut toks = src.split_whitespace();
    let mut steps = Vec::new();
    while let Some(tok) = toks.next() {
        if tok != "STEP" {
            return Err(ScriptReject::ExpectedStep(tok.to_string()));
        }
        let mut next = || toks.next().ok_or(ScriptReject::Truncated);
        let rule = next()?.to_string();
        let direction = match next()? {
            "LR" => Direction::Lr,
            "RL" => Direction::Rl,
            d => return Err(ScriptReject::BadDirection(d.to_string())),
        };
        let path = parse_path(next()?)?;
        let bindings = parse_bindings(next()?)?;
        match next()? {
            ";" => {}
            t => return Err(ScriptReject::ExpectedSemicolon(t.to_string())),
        }
        steps.push(Step {
            rule,
            direction,
            path,
            bindings,
        });
    }
    Ok(ProofScript { steps })
}

/// Replays `script` on `goal.lhs`; accepts iff the result equals `goal.rhs`.
pub fn check_script(lib: &Library, goal: &Theorem, script: &ProofScript) -> bool {
    let mut current = goal.lhs.clone();
    for step in &script.steps {
        let Some(rule) = lib.rule(&step.rule) else {
            return false;
        };
        let bound: BTreeSet<&String> = step.bindings.iter().map(|(v, _)| v).collect();
        let wanted: BTreeSet<&String> = rule.vars.iter().collect();
        if bound != wanted {
            return false;
        }
        let (from, to) = match step.direction {
            Direction::Lr => (&rule.lhs, &rule.rhs),
            Direction::Rl => (&rule.rhs, &rule.lhs),
        };
        let Some(site) = current.subterm_mut(&step.path) else {
            return false;
        };
        if *site != from.substitute(&step.bindings) {
            return false;
        }
        *site = to.substitute(&step.bindings);
    }
    current == goal.rhs
}

/// The kernel's decision on a raw trace.
pub fn kernel_check(lib: &Library, goal: &Theorem, trace: &Trace) -> bool {
    match parse_script(trace.as_str()) {
        Ok(script) => check_script(lib, goal, &script),
        Err(_) => false,
    }
}

/// Step count of a parsed script, 0 when the trace is not a script.
pub fn script_steps(trace: &Trace) -> usize {
    parse_script(trace.as_str())
        .map(|s| s.steps.len())
        .unwrap_or(0)
}

/// A theorem-proving task: accept iff the kernel accepts the trace as a
/// proof of `goal` against `library`.
#[derive(Debug, Clone, PartialEq)]
pub struct MathTask {
    pub library: Arc<Library>,
    pub goal: Theorem,
}

impl MathTask {
    pub fn score(&self, trace: &Trace) -> f64 {
        if kernel_check(&self.library, &self.goal, trace) {
            1.0
        } else {
            0.0
        }
    }
}

/// Swaps the operands of one randomly chosen `+` node on one side of the
/// goal. Experimental goal scheme; the result need not be provable.
pub fn perturb_goal(goal: &Theorem, rng: &mut Rng) -> Option<Theorem> {
    let mut sides = [goal.lhs.clone(), goal.rhs.clone()];
    let mut sites = Vec::new();
    for (side, t) in sides.iter().enumerate() {
        let mut paths = Vec::new();
        t.plus_paths(&mut Vec::new(), &mut paths);
        sites.extend(paths.into_iter().map(|p| (side, p)));
    }
    if sites.is_empty() {
        return None;
    }
    let (side, path) = sites[rng.gen_range(0..sites.len())].clone();
    let node = sides[side].subterm_mut(&path)?;
    if let Term::Plus(a, b) = node {
        std::mem::swap(a, b);
    }
    let [lhs, rhs] = sides;
    Some(Theorem {
        id: format!("{}~{}", goal.id, rng.gen::<u16>()),
        lhs,
        rhs,
        vars: goal.vars.clone(),
    })
}

/// How the resource coordinate of a library battery is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceModel {
    /// Parsed step count of the script, independent of the library.
    #[default]
    ScriptSteps,
    /// Step count when the script is accepted, 0 otherwise. Cost then
    /// grows with the library.
    AcceptedSteps,
}

/// A goal of a library battery with its finite candidate scripts.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryGoal {
    pub theorem: Theorem,
    pub candidates: Vec<Trace>,
}

/// The battery induced by a library: one formal task per goal, scored by
/// the kernel against `library`, with a one-dimensional step-count resource.
pub fn library_battery(
    library: &Library,
    goals: &[LibraryGoal],
    weights: Vec<f64>,
    model: ResourceModel,
) -> Result<Battery, BatteryError> {
    let lib = Arc::new(library.clone());
    let mut tasks = Vec::with_capacity(goals.len());
    for g in goals {
        library
            .check_goal(&g.theorem)
            .map_err(|e| BatteryError::Spec(e.to_string()))?;
        let resources = g
            .candidates
            .iter()
            .map(|c| {
                let steps = script_steps(c) as f64;
                match model {
                    ResourceModel::ScriptSteps => vec![steps],
                    ResourceModel::AcceptedSteps if kernel_check(&lib, &g.theorem, c) => {
                        vec![steps]
                    }
                    ResourceModel::AcceptedSteps => vec![0.0],
                }
            })
            .collect();
        tasks.push(Task::new(
            g.theorem.id(),
            Scorer::math(lib.clone(), g.theorem.clone()),
            g.candidates.clone(),
            resources,
            Formality::Formal,
        )?);
    }
    Battery::new(library.id(), tasks, weights, 1)
}

/// The serialized shape of a theorem in scenario files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub id: String,
    pub lhs: String,
    pub rhs: String,
    #[serde(default)]
    pub vars: Vec<String>,
}

impl TheoremRecord {
    pub fn to_theorem(&self) -> Result<Theorem, KernelError> {
        let vars: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        Theorem::parse(&self.id, &self.lhs, &self.rhs, &vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const TWO: &str = "STEP A2 LR root x:=s(0),y:=0 ; STEP A1 LR 0 x:=s(0) ;";
    const Z01: &str = "STEP A2 LR root x:=0,y:=0 ; STEP A1 LR 0 x:=0 ;";

    fn one_plus_one() -> Theorem {
        Theorem::parse("two", "(s(0)+s(0))", "s(s(0))", &[]).unwrap()
    }

    fn z01() -> Theorem {
        Theorem::parse("z01", "(0+s(0))", "s(0)", &[]).unwrap()
    }

    #[test]
    fn term_round_trip() {
        for src in ["0", "s(0)", "(x+s(y))", "s((s(0)+0))", "(ab_1+0)"] {
            assert_eq!(parse_term(src).unwrap().to_string(), src);
        }
        assert!(parse_term("(0+)").is_err());
        assert!(parse_term("s(0").is_err());
        assert!(parse_term("0 ").is_err());
        assert_eq!(Term::numeral(2).to_string(), "s(s(0))");
    }

    #[test]
    fn parse_script_examples() {
        let s = parse_script("STEP A1 LR 0 x:=s(0) ;").unwrap();
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.steps[0].path, vec![0]);
        assert_eq!(
            s.steps[0].bindings,
            vec![("x".to_string(), Term::numeral(1))]
        );
        assert_eq!(s.to_trace().as_str(), "STEP A1 LR 0 x:=s(0) ;");
        assert!(parse_script("hello").is_err());
        assert_eq!(parse_script("").unwrap().steps.len(), 0);
        assert!(parse_script("STEP A1 LR 0 x:=s(0)").is_err());
        assert!(parse_script("STEP A1 UP 0 x:=0 ;").is_err());
        assert!(parse_script("STEP A1 LR a.b x:=0 ;").is_err());
        assert!(parse_script("STEP A1 LR 0 x:=0,x:=0 ;").is_err());
        assert!(parse_script("PUSH 2 PUSH 3 ADD OUT HALT").is_err());
    }

    #[test]
    fn kernel_examples() {
        let lib = Library::base("L0");
        let goal = one_plus_one();
        assert!(kernel_check(&lib, &goal, &TWO.into()));
        assert!(kernel_check(&lib, &goal, &TWO.into()));
        let z = z01();
        assert!(!kernel_check(&lib, &z, &"".into()));
        assert!(kernel_check(&lib, &z, &Z01.into()));
        // Wrong site, missing binding, unknown rule.
        assert!(!kernel_check(
            &lib,
            &goal,
            &"STEP A1 LR root x:=s(0) ;".into()
        ));
        assert!(!kernel_check(
            &lib,
            &goal,
            &"STEP A2 LR root x:=s(0) ;".into()
        ));
        assert!(!kernel_check(&lib, &goal, &"STEP z01 LR root - ;".into()));
        // The empty script proves reflexive goals.
        let refl = Theorem::parse("refl", "s(x)", "s(x)", &["x"]).unwrap();
        assert!(kernel_check(&lib, &refl, &"".into()));
    }

    #[test]
    fn right_to_left_rewrites() {
        let lib = Library::base("L0");
        let goal = Theorem::parse("back", "s(0)", "(s(0)+0)", &[]).unwrap();
        assert!(kernel_check(
            &lib,
            &goal,
            &"STEP A1 RL root x:=s(0) ;".into()
        ));
    }

    #[test]
    fn universal_lemma_with_variables() {
        let lib = Library::base("L0");
        let succ_one = Theorem::parse("sx", "(x+s(0))", "s(x)", &["x"]).unwrap();
        let proof: Trace = "STEP A2 LR root x:=x,y:=0 ; STEP A1 LR 0 x:=x ;".into();
        assert!(kernel_check(&lib, &succ_one, &proof));
        let lib2 = lib.extend(succ_one, proof).unwrap();
        // Instantiating the lemma at x := s(0) proves 1+1 in one step.
        let goal = one_plus_one();
        assert!(kernel_check(
            &lib2,
            &goal,
            &"STEP sx LR root x:=s(0) ;".into()
        ));
        assert!(!kernel_check(
            &lib,
            &goal,
            &"STEP sx LR root x:=s(0) ;".into()
        ));
    }

    #[test]
    fn extend_library_examples() {
        let l0 = Library::base("L0");
        let l1 = extend_library(&l0, z01(), Z01.into()).unwrap();
        assert_eq!(l1.id(), "L0+z01");
        assert!(l1.rule("z01").is_some());
        assert!(l0.is_subset_of(&l1));
        assert!(!l1.is_subset_of(&l0));
        assert_eq!(
            extend_library(&l1, z01(), Z01.into()).unwrap_err(),
            KernelError::DuplicateLemma("z01".into())
        );
        let bad = extend_library(&l0, one_plus_one(), "".into()).unwrap_err();
        assert!(matches!(bad, KernelError::UnprovedLemma { .. }));
        assert!(l0.lemmas().is_empty());
        let a1 = Theorem::parse("A1", "0", "0", &[]).unwrap();
        assert!(matches!(
            l0.extend(a1, "".into()),
            Err(KernelError::ReservedId(_))
        ));
    }

    #[test]
    fn theorem_validation() {
        let err = Theorem::parse("bad", "(x+0)", "x", &[]).unwrap_err();
        assert!(matches!(err, KernelError::UnlistedVariables { .. }));
    }

    #[test]
    fn math_task_scores() {
        let task = MathTask {
            library: Arc::new(Library::base("L0")),
            goal: one_plus_one(),
        };
        assert_eq!(task.score(&TWO.into()), 1.0);
        assert_eq!(task.score(&"hello".into()), 0.0);
        assert_eq!(task.score(&"PUSH 2 PUSH 3 ADD OUT HALT".into()), 0.0);
        assert_eq!(script_steps(&TWO.into()), 2);
        assert_eq!(script_steps(&"hello".into()), 0);
    }

    #[test]
    fn perturbation_swaps_an_operand_pair() {
        let goal = one_plus_one();
        let mut r = rng::keyed(3, &[]);
        let p = perturb_goal(&goal, &mut r).unwrap();
        assert_eq!(p.lhs().to_string(), "(s(0)+s(0))");
        let asym = Theorem::parse("a", "(0+s(0))", "s(0)", &[]).unwrap();
        let p = perturb_goal(&asym, &mut r).unwrap();
        assert_eq!(p.lhs().to_string(), "(s(0)+0)");
        let none = Theorem::parse("n", "0", "0", &[]).unwrap();
        assert!(perturb_goal(&none, &mut r).is_none());
    }
}
