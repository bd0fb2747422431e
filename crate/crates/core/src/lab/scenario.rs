//! Scenario files: TOML documents describing fixtures and experiment
//! sections. `load_scenario` parses, resolves every cross-reference and
//! checks all normalizations up front.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::agent::{Agent, AgentClass, AgentPolicy};
use crate::battery::{AaiSpec, Battery, BatteryError, BatteryOptions, Formality, Task};
use crate::code::{CodeProblem, Grading, TestCase, DEFAULT_FUEL};
use crate::gvu::{DeepAlgebra, FlowConfig, SamplingScheme};
use crate::kernel::{library_battery, Library, LibraryGoal, ResourceModel, Theorem, TheoremRecord};
use crate::scorer::{delta_scorer, Monomial, Polynomial, Scorer};
use crate::trace::{Alphabet, FiniteSupportFn, Trace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{kind} {name:?} referenced by {from} is not defined")]
    Dangling {
        kind: &'static str,
        name: String,
        from: String,
    },
    #[error("duplicate {kind} {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("normalization error in {what}: {reason}")]
    Normalization { what: String, reason: String },
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },
}

fn invalid(what: impl Into<String>, reason: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        what: what.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    id: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    alphabet: Vec<char>,
    #[serde(default = "default_max_len")]
    max_len: usize,
    #[serde(default)]
    agent_classes: Vec<ClassRecord>,
    #[serde(default)]
    scorers: Vec<ScorerRecord>,
    #[serde(default)]
    theorems: Vec<TheoremRecord>,
    #[serde(default)]
    libraries: Vec<LibraryRecord>,
    #[serde(default)]
    code_problems: Vec<ProblemRecord>,
    #[serde(default)]
    batteries: Vec<BatteryRecord>,
    #[serde(default)]
    policies: Vec<AgentPolicy>,
    aai: Option<AaiRecord>,
    oneshot: Option<OneShotSection>,
    density_full: Option<DensityFullSection>,
    nondensity: Option<NonDensitySection>,
    bl_audit: Option<BlAuditSection>,
    monotonicity: Option<MonotonicitySection>,
    collapse: Option<CollapseSection>,
    flow: Option<FlowSection>,
    deep_algebra: Option<DeepAlgebraRecord>,
}

fn default_max_len() -> usize {
    4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRecord {
    label: String,
    agents: Vec<Vec<(Trace, f64)>>,
}

#[derive(Debug, Deserialize)]
struct ScorerRecord {
    id: String,
    #[serde(flatten)]
    kind: ScorerKind,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ScorerKind {
    Table {
        entries: BTreeMap<Trace, f64>,
    },
    ExactMatch {
        target: Trace,
    },
    Delta {
        target: Trace,
    },
    Code {
        problem: String,
    },
    Math {
        library: String,
        goal: String,
    },
    Const {
        value: f64,
    },
    Poly {
        args: Vec<String>,
        #[serde(default)]
        coefs: Vec<f64>,
        #[serde(default)]
        terms: Vec<TermRecord>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    coef: f64,
    exps: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryRecord {
    id: String,
    extends: Option<String>,
    #[serde(default)]
    lemmas: Vec<LemmaRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LemmaRecord {
    theorem: String,
    proof: Trace,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRecord {
    id: String,
    #[serde(default = "default_fuel")]
    fuel: u64,
    #[serde(default = "default_grading")]
    grading: Grading,
    tests: Vec<TestCase>,
}

fn default_fuel() -> u64 {
    DEFAULT_FUEL
}

fn default_grading() -> Grading {
    Grading::AllOrNothing
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryRecord {
    id: String,
    weights: Vec<f64>,
    #[serde(default)]
    resource_dims: usize,
    #[serde(default)]
    allow_clamping: bool,
    #[serde(default)]
    tasks: Vec<TaskRecord>,
    library: Option<String>,
    #[serde(default)]
    goals: Vec<GoalRecord>,
    #[serde(default)]
    model: ResourceModel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskRecord {
    id: String,
    scorer: String,
    candidates: Vec<Trace>,
    #[serde(default)]
    resources: Vec<Vec<f64>>,
    #[serde(default)]
    formality: Formality,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalRecord {
    pub theorem: String,
    pub candidates: Vec<Trace>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AaiRecord {
    task_weights: Vec<f64>,
    #[serde(default)]
    cost_weight: f64,
    #[serde(default = "one")]
    cost_cap: f64,
}

fn one() -> f64 {
    1.0
}

/// One-shot approximation and density checks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneShotSection {
    pub class: String,
    pub scorers: Vec<String>,
    pub epsilons: Vec<f64>,
    /// Extra seeded random `(f, 𝒜, ε)` instances over the scenario alphabet.
    #[serde(default)]
    pub random_instances: usize,
}

/// Battery-level density checks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFullSection {
    #[serde(default)]
    pub batteries: Vec<String>,
    #[serde(default)]
    pub policies: Vec<String>,
    pub epsilons: Vec<f64>,
    /// Extra seeded random batteries with 1 to 3 tasks.
    #[serde(default)]
    pub random_instances: usize,
    #[serde(default = "default_random_policies")]
    pub random_policies: usize,
}

fn default_random_policies() -> usize {
    6
}

/// The mathematics-only obstruction.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonDensitySection {
    pub library: String,
    pub theorems: Vec<String>,
    pub w1: Trace,
    pub w2: Trace,
    /// Reference class; defaults to the two point masses.
    pub class: Option<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    200
}

/// Bounded-Lipschitz metric audits on seeded random laws.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlAuditSection {
    #[serde(default = "hundred")]
    pub random_pairs: usize,
    #[serde(default = "hundred")]
    pub couplings: usize,
    /// Random two- and three-point fixtures compared with a grid oracle.
    #[serde(default = "default_grid")]
    pub grid_fixtures: usize,
    pub battery: Option<String>,
    #[serde(default)]
    pub policies: Vec<String>,
    /// Episodes for the sampled-versus-exact law check.
    #[serde(default = "default_episodes")]
    pub episodes: usize,
}

fn hundred() -> usize {
    100
}

fn default_grid() -> usize {
    12
}

fn default_episodes() -> usize {
    4000
}

/// Library-extension monotonicity.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicitySection {
    pub small: String,
    pub large: String,
    pub goals: Vec<GoalRecord>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub model: ResourceModel,
    pub policies: Vec<String>,
    /// A policy expected to gain strictly from the larger library.
    pub staged: Option<String>,
}

/// Oracle-versus-noisy variance decomposition.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSection {
    pub battery: String,
    pub task: String,
    /// Logits of the generator on `task`; uniform when absent.
    pub logits: Option<Vec<f64>>,
    pub noise: Vec<f64>,
    #[serde(default = "default_traces")]
    pub n_traces: usize,
    #[serde(default = "default_rescores")]
    pub n_rescores: usize,
}

fn default_traces() -> usize {
    10_000
}

fn default_rescores() -> usize {
    4
}

/// Seed-aggregated oracle-versus-noisy flows.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub battery: String,
    pub eta: f64,
    pub rounds: usize,
    pub batch_size: usize,
    #[serde(default = "two")]
    pub rescores: usize,
    #[serde(default)]
    pub scheme: SamplingScheme,
    #[serde(default = "twenty")]
    pub seeds: usize,
    pub noise: f64,
    pub margin: f64,
    /// Rounds before this index are exempt from the monotone-trend check.
    #[serde(default = "two")]
    pub burn_in: usize,
    #[serde(default = "default_min_monotone")]
    pub min_monotone: usize,
}

fn two() -> usize {
    2
}

fn twenty() -> usize {
    20
}

fn default_min_monotone() -> usize {
    18
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeepAlgebraRecord {
    library: String,
    goals: Vec<GoalRecord>,
    weights: Vec<f64>,
    #[serde(default)]
    model: ResourceModel,
    lemma_task: String,
    eta: f64,
    rounds: usize,
    batch_size: usize,
    #[serde(default = "two")]
    rescores: usize,
}

/// A resolved library-extension flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepAlgebraSection {
    pub stage: DeepAlgebra,
    pub eta: f64,
    pub rounds: usize,
    pub batch_size: usize,
    pub rescores: usize,
}

impl DeepAlgebraSection {
    pub fn config(&self, seed: u64) -> FlowConfig {
        FlowConfig {
            eta: self.eta,
            rounds: self.rounds,
            batch_size: self.batch_size,
            rescores: self.rescores,
            scheme: SamplingScheme::Iid,
            seed,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub seed: u64,
    pub alphabet: Option<Alphabet>,
    pub max_len: usize,
    pub classes: BTreeMap<String, AgentClass>,
    pub scorers: BTreeMap<String, Scorer>,
    pub theorems: BTreeMap<String, Theorem>,
    pub libraries: BTreeMap<String, Library>,
    pub batteries: BTreeMap<String, Battery>,
    pub policies: BTreeMap<String, AgentPolicy>,
    pub aai: Option<AaiSpec>,
    pub oneshot: Option<OneShotSection>,
    pub density_full: Option<DensityFullSection>,
    pub nondensity: Option<NonDensitySection>,
    pub bl_audit: Option<BlAuditSection>,
    pub monotonicity: Option<MonotonicitySection>,
    pub collapse: Option<CollapseSection>,
    pub flow: Option<FlowSection>,
    pub deep_algebra: Option<DeepAlgebraSection>,
}

impl Scenario {
    pub fn class(&self, name: &str, from: &str) -> Result<&AgentClass, ScenarioError> {
        lookup(&self.classes, "agent class", name, from)
    }

    pub fn scorer(&self, name: &str, from: &str) -> Result<&Scorer, ScenarioError> {
        lookup(&self.scorers, "scorer", name, from)
    }

    pub fn battery(&self, name: &str, from: &str) -> Result<&Battery, ScenarioError> {
        lookup(&self.batteries, "battery", name, from)
    }

    pub fn library(&self, name: &str, from: &str) -> Result<&Library, ScenarioError> {
        lookup(&self.libraries, "library", name, from)
    }

    pub fn theorem(&self, name: &str, from: &str) -> Result<&Theorem, ScenarioError> {
        lookup(&self.theorems, "theorem", name, from)
    }

    pub fn policy_list(
        &self,
        names: &[String],
        from: &str,
    ) -> Result<Vec<AgentPolicy>, ScenarioError> {
        names
            .iter()
            .map(|n| lookup(&self.policies, "policy", n, from).cloned())
            .collect()
    }

    /// The scenario's capability spec, or success-only weights of `battery`.
    pub fn spec_for(&self, battery: &Battery) -> Result<AaiSpec, BatteryError> {
        match &self.aai {
            Some(s) if s.task_weights().len() == battery.tasks().len() => Ok(s.clone()),
            _ => AaiSpec::success_only(battery),
        }
    }

    pub fn goals(
        &self,
        goals: &[GoalRecord],
        from: &str,
    ) -> Result<Vec<LibraryGoal>, ScenarioError> {
        goals
            .iter()
            .map(|g| {
                Ok(LibraryGoal {
                    theorem: self.theorem(&g.theorem, from)?.clone(),
                    candidates: g.candidates.clone(),
                })
            })
            .collect()
    }
}

fn lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    kind: &'static str,
    name: &str,
    from: &str,
) -> Result<&'a T, ScenarioError> {
    map.get(name).ok_or_else(|| ScenarioError::Dangling {
        kind,
        name: name.to_string(),
        from: from.to_string(),
    })
}

fn insert<T>(
    map: &mut BTreeMap<String, T>,
    kind: &'static str,
    name: &str,
    value: T,
) -> Result<(), ScenarioError> {
    if map.insert(name.to_string(), value).is_some() {
        return Err(ScenarioError::Duplicate {
            kind,
            name: name.to_string(),
        });
    }
    Ok(())
}

fn check_weights(what: String, w: &[f64]) -> Result<(), ScenarioError> {
    let total: f64 = w.iter().sum();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(ScenarioError::Normalization {
            what,
            reason: format!("weights {w:?} sum to {total}"),
        });
    }
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    resolve(file)
}

fn resolve(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let alphabet = if file.alphabet.is_empty() {
        None
    } else {
        Some(Alphabet::new(file.alphabet.iter().copied()).map_err(|e| invalid("alphabet", e))?)
    };

    let mut classes = BTreeMap::new();
    for c in file.agent_classes {
        let agents = c
            .agents
            .into_iter()
            .enumerate()
            .map(|(i, atoms)| {
                Agent::new(atoms).map_err(|e| ScenarioError::Normalization {
                    what: format!("agent {i} of class {:?}", c.label),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let class = AgentClass::new(c.label.clone(), agents)
            .map_err(|e| invalid(format!("class {:?}", c.label), e))?;
        insert(&mut classes, "agent class", &c.label, class)?;
    }

    let mut theorems = BTreeMap::new();
    for t in &file.theorems {
        let th = t
            .to_theorem()
            .map_err(|e| invalid(format!("theorem {:?}", t.id), e))?;
        insert(&mut theorems, "theorem", &t.id, th)?;
    }

    // Libraries may extend earlier ones only, so declaration order is a
    // topological order.
    let mut libraries: BTreeMap<String, Library> = BTreeMap::new();
    for l in &file.libraries {
        let from = format!("library {:?}", l.id);
        let mut lib = match &l.extends {
            Some(parent) => lookup(&libraries, "library", parent, &from)?.clone(),
            None => Library::base(l.id.clone()),
        };
        for lemma in &l.lemmas {
            let th = lookup(&theorems, "theorem", &lemma.theorem, &from)?.clone();
            lib = lib
                .extend(th, lemma.proof.clone())
                .map_err(|e| invalid(from.clone(), e))?;
        }
        insert(&mut libraries, "library", &l.id, lib.with_id(l.id.clone()))?;
    }

    let mut problems = BTreeMap::new();
    for p in file.code_problems {
        let prob = CodeProblem::new(p.id.clone(), p.tests, p.fuel, p.grading)
            .map_err(|e| invalid(format!("code problem {:?}", p.id), e))?;
        insert(&mut problems, "code problem", &p.id, Arc::new(prob))?;
    }

    let mut scorers: BTreeMap<String, Scorer> = BTreeMap::new();
    for s in file.scorers {
        let from = format!("scorer {:?}", s.id);
        let scorer = match s.kind {
            ScorerKind::Table { entries } => {
                Scorer::Table(FiniteSupportFn::new(entries).map_err(|e| invalid(from.clone(), e))?)
            }
            ScorerKind::ExactMatch { target } => Scorer::ExactMatch(target),
            ScorerKind::Delta { target } => delta_scorer(target),
            ScorerKind::Code { problem } => {
                Scorer::Code(lookup(&problems, "code problem", &problem, &from)?.clone())
            }
            ScorerKind::Math { library, goal } => {
                let lib = lookup(&libraries, "library", &library, &from)?;
                let th = lookup(&theorems, "theorem", &goal, &from)?;
                Scorer::math(Arc::new(lib.clone()), th.clone())
            }
            ScorerKind::Const { value } => Scorer::Const(value),
            ScorerKind::Poly { args, coefs, terms } => {
                let resolved = args
                    .iter()
                    .map(|a| lookup(&scorers, "scorer", a, &from).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                let poly = if terms.is_empty() {
                    if coefs.len() != args.len() {
                        return Err(invalid(
                            from,
                            format!("{} coefficients for {} args", coefs.len(), args.len()),
                        ));
                    }
                    Polynomial::linear(&coefs)
                } else {
                    let monos = terms
                        .into_iter()
                        .map(|t| Monomial {
                            coef: t.coef,
                            exps: t.exps,
                        })
                        .collect();
                    Polynomial::new(args.len(), monos).map_err(|e| invalid(from.clone(), e))?
                };
                Scorer::poly(poly, resolved).map_err(|e| invalid(from.clone(), e))?
            }
        };
        insert(&mut scorers, "scorer", &s.id, scorer)?;
    }

    let mut batteries = BTreeMap::new();
    for b in file.batteries {
        let from = format!("battery {:?}", b.id);
        check_weights(from.clone(), &b.weights)?;
        let battery = match &b.library {
            Some(lib) => {
                if !b.tasks.is_empty() {
                    return Err(invalid(from, "a library battery takes goals, not tasks"));
                }
                let lib = lookup(&libraries, "library", lib, &from)?;
                let goals = b
                    .goals
                    .iter()
                    .map(|g| {
                        Ok(LibraryGoal {
                            theorem: lookup(&theorems, "theorem", &g.theorem, &from)?.clone(),
                            candidates: g.candidates.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                library_battery(lib, &goals, b.weights.clone(), b.model)
                    .map_err(|e| invalid(from.clone(), e))?
            }
            None => {
                let tasks = b
                    .tasks
                    .into_iter()
                    .map(|t| {
                        let scorer = lookup(&scorers, "scorer", &t.scorer, &from)?.clone();
                        Task::new(t.id, scorer, t.candidates, t.resources, t.formality)
                            .map_err(|e| invalid(from.clone(), e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let opts = BatteryOptions {
                    allow_clamping: b.allow_clamping,
                };
                Battery::with_options(b.id.clone(), tasks, b.weights, b.resource_dims, opts)
                    .map_err(|e| invalid(from.clone(), e))?
            }
        };
        insert(&mut batteries, "battery", &b.id, battery)?;
    }

    let mut policies = BTreeMap::new();
    for p in file.policies {
        let label = p.label.clone();
        insert(&mut policies, "policy", &label, p)?;
    }

    let aai = match file.aai {
        Some(a) => Some(
            AaiSpec::new(a.task_weights, a.cost_weight, a.cost_cap)
                .map_err(|e| invalid("aai", e))?,
        ),
        None => None,
    };

    let scenario_libs = libraries.clone();
    let scenario_theorems = theorems.clone();
    let deep_algebra = match file.deep_algebra {
        Some(d) => {
            let from = "deep_algebra".to_string();
            check_weights(from.clone(), &d.weights)?;
            let library = lookup(&scenario_libs, "library", &d.library, &from)?.clone();
            let goals = d
                .goals
                .iter()
                .map(|g| {
                    Ok(LibraryGoal {
                        theorem: lookup(&scenario_theorems, "theorem", &g.theorem, &from)?.clone(),
                        candidates: g.candidates.clone(),
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            if !goals.iter().any(|g| g.theorem.id() == d.lemma_task) {
                return Err(ScenarioError::Dangling {
                    kind: "goal",
                    name: d.lemma_task,
                    from,
                });
            }
            Some(DeepAlgebraSection {
                stage: DeepAlgebra {
                    library,
                    goals,
                    weights: d.weights,
                    model: d.model,
                    lemma_task: d.lemma_task,
                },
                eta: d.eta,
                rounds: d.rounds,
                batch_size: d.batch_size,
                rescores: d.rescores,
            })
        }
        None => None,
    };

    let scenario = Scenario {
        id: file.id,
        seed: file.seed,
        alphabet,
        max_len: file.max_len,
        classes,
        scorers,
        theorems,
        libraries,
        batteries,
        policies,
        aai,
        oneshot: file.oneshot,
        density_full: file.density_full,
        nondensity: file.nondensity,
        bl_audit: file.bl_audit,
        monotonicity: file.monotonicity,
        collapse: file.collapse,
        flow: file.flow,
        deep_algebra,
    };
    check_sections(&scenario)?;
    Ok(scenario)
}

/// Resolves every name a section mentions, so commands cannot fail on a
/// dangling reference halfway through.
fn check_sections(s: &Scenario) -> Result<(), ScenarioError> {
    if let Some(o) = &s.oneshot {
        s.class(&o.class, "oneshot")?;
        for f in &o.scorers {
            s.scorer(f, "oneshot")?;
        }
        if o.random_instances > 0 && s.alphabet.is_none() {
            return Err(invalid("oneshot", "random instances need an alphabet"));
        }
    }
    if let Some(d) = &s.density_full {
        for b in &d.batteries {
            s.battery(b, "density_full")?;
        }
        s.policy_list(&d.policies, "density_full")?;
        if d.random_instances > 0 && s.alphabet.is_none() {
            return Err(invalid("density_full", "random instances need an alphabet"));
        }
    }
    if let Some(n) = &s.nondensity {
        s.library(&n.library, "nondensity")?;
        for t in &n.theorems {
            s.theorem(t, "nondensity")?;
        }
        if let Some(c) = &n.class {
            s.class(c, "nondensity")?;
        }
    }
    if let Some(b) = &s.bl_audit {
        if let Some(name) = &b.battery {
            s.battery(name, "bl_audit")?;
        }
        s.policy_list(&b.policies, "bl_audit")?;
    }
    if let Some(m) = &s.monotonicity {
        s.library(&m.small, "monotonicity")?;
        s.library(&m.large, "monotonicity")?;
        s.goals(&m.goals, "monotonicity")?;
        check_weights("monotonicity".into(), &m.weights)?;
        s.policy_list(&m.policies, "monotonicity")?;
        if let Some(st) = &m.staged {
            if !m.policies.contains(st) {
                return Err(ScenarioError::Dangling {
                    kind: "policy",
                    name: st.clone(),
                    from: "monotonicity.staged".into(),
                });
            }
        }
    }
    if let Some(c) = &s.collapse {
        let b = s.battery(&c.battery, "collapse")?;
        if b.task_index(&c.task).is_none() {
            return Err(ScenarioError::Dangling {
                kind: "task",
                name: c.task.clone(),
                from: "collapse".into(),
            });
        }
    }
    if let Some(f) = &s.flow {
        s.battery(&f.battery, "flow")?;
    }
    Ok(())
}
