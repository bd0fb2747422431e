//! Agents as finite-support trace distributions, reference classes, and
//! uniform-tightness certificates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::Battery;
use crate::scorer::Scorer;
use crate::trace::Trace;

/// Allowed drift of total mass away from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("negative or non-finite mass {mass} on trace {trace:?}")]
    BadMass { trace: String, mass: f64 },
    #[error("masses sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("agent class {0:?} is empty")]
    EmptyClass(String),
    #[error("tightness level {0} is outside (0, 1]")]
    BadDelta(f64),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("policy {policy:?} on task {task:?}: {reason}")]
    BadPolicy {
        policy: String,
        task: String,
        reason: String,
    },
}

/// A probability distribution on finitely many traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(Trace, f64)>", into = "Vec<(Trace, f64)>")]
pub struct Agent {
    mass: BTreeMap<Trace, f64>,
}

impl Agent {
    /// Builds an agent, merging repeated traces. Zero masses are dropped.
    pub fn new(masses: impl IntoIterator<Item = (Trace, f64)>) -> Result<Self, AgentError> {
        let mut mass: BTreeMap<Trace, f64> = BTreeMap::new();
        for (trace, m) in masses {
            if !m.is_finite() || m < 0.0 {
                return Err(AgentError::BadMass {
                    trace: trace.as_str().to_string(),
                    mass: m,
                });
            }
            if m > 0.0 {
                *mass.entry(trace).or_insert(0.0) += m;
            }
        }
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(AgentError::NotNormalized(total));
        }
        Ok(Self { mass })
    }

    pub fn point_mass(trace: Trace) -> Self {
        Self {
            mass: BTreeMap::from([(trace, 1.0)]),
        }
    }

    /// `Σ_i w_i P_i`; weights must form a probability vector.
    pub fn mixture(parts: &[(f64, &Agent)]) -> Result<Self, AgentError> {
        Agent::new(
            parts
                .iter()
                .flat_map(|(w, a)| a.mass.iter().map(move |(t, m)| (t.clone(), w * m))),
        )
    }

    pub fn mass(&self, trace: &Trace) -> f64 {
        self.mass.get(trace).copied().unwrap_or(0.0)
    }

    /// Support in canonical order, with masses.
    pub fn iter(&self) -> impl Iterator<Item = (&Trace, f64)> {
        self.mass.iter().map(|(t, &m)| (t, m))
    }

    pub fn support(&self) -> impl Iterator<Item = &Trace> {
        self.mass.keys()
    }

    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    /// `E_{ω∼P}[f(ω)]`.
    pub fn expectation(&self, f: impl Fn(&Trace) -> f64) -> f64 {
        self.mass.iter().map(|(t, &m)| f(t) * m).sum()
    }

    /// Mass placed outside `core`.
    pub fn tail_mass(&self, core: &BTreeSet<Trace>) -> f64 {
        self.mass
            .iter()
            .filter(|(t, _)| !core.contains(*t))
            .map(|(_, &m)| m)
            .sum()
    }
}

impl TryFrom<Vec<(Trace, f64)>> for Agent {
    type Error = AgentError;

    fn try_from(v: Vec<(Trace, f64)>) -> Result<Self, Self::Error> {
        Agent::new(v)
    }
}

impl From<Agent> for Vec<(Trace, f64)> {
    fn from(a: Agent) -> Self {
        a.mass.into_iter().collect()
    }
}

/// `point_mass`.
pub fn point_mass(trace: Trace) -> Agent {
    Agent::point_mass(trace)
}

/// `agent_expectation` of a scorer, using raw (unclamped) values.
pub fn agent_expectation(agent: &Agent, scorer: &Scorer) -> f64 {
    agent.expectation(|t| scorer.score(t))
}

/// A nonempty, ordered, finite reference class of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AgentClassRecord", into = "AgentClassRecord")]
pub struct AgentClass {
    label: String,
    agents: Vec<Agent>,
}

#[derive(Serialize, Deserialize)]
struct AgentClassRecord {
    label: String,
    agents: Vec<Agent>,
}

impl TryFrom<AgentClassRecord> for AgentClass {
    type Error = AgentError;

    fn try_from(r: AgentClassRecord) -> Result<Self, Self::Error> {
        AgentClass::new(r.label, r.agents)
    }
}

impl From<AgentClass> for AgentClassRecord {
    fn from(c: AgentClass) -> Self {
        AgentClassRecord {
            label: c.label,
            agents: c.agents,
        }
    }
}

impl AgentClass {
    pub fn new(label: impl Into<String>, agents: Vec<Agent>) -> Result<Self, AgentError> {
        let label = label.into();
        if agents.is_empty() {
            return Err(AgentError::EmptyClass(label));
        }
        Ok(Self { label, agents })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Union of all supports.
    pub fn support(&self) -> BTreeSet<Trace> {
        self.agents
            .iter()
            .flat_map(|a| a.support().cloned())
            .collect()
    }
}

/// A finite core `F_δ` with `max_P P(Ω ∖ F_δ) ≤ δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessCertificate {
    pub delta: f64,
    pub core: BTreeSet<Trace>,
    /// Largest out-of-core mass over the class.
    pub attained_tail: f64,
}

/// Greedy uniform-tightness core.
///
/// Starting from the empty core, repeatedly take the agent with the largest
/// out-of-core mass (lowest index on ties) and add its heaviest
/// out-of-core trace (canonical order on ties), until every agent's tail is
/// at most `delta`. The sequence of added traces does not depend on
/// `delta`, so cores are nested: a smaller `delta` yields a superset.
///
/// The empty core's tail is taken to be exactly 1, the total mass of a
/// probability measure, so `delta = 1` always returns the empty core.
pub fn tightness_core(class: &AgentClass, delta: f64) -> Result<TightnessCertificate, AgentError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(AgentError::BadDelta(delta));
    }
    let mut core = BTreeSet::new();
    if delta >= 1.0 {
        return Ok(TightnessCertificate {
            delta,
            core,
            attained_tail: 1.0,
        });
    }
    loop {
        let tails: Vec<f64> = class.agents.iter().map(|a| a.tail_mass(&core)).collect();
        let (worst, &tail) = tails
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        if tail <= delta {
            return Ok(TightnessCertificate {
                delta,
                core,
                attained_tail: tail,
            });
        }
        let agent = &class.agents[worst];
        let pick = agent.iter().filter(|(t, _)| !core.contains(*t)).fold(
            None::<(&Trace, f64)>,
            |best, (t, m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((t, m)),
            },
        );
        match pick {
            Some((t, _)) => {
                core.insert(t.clone());
            }
            // Unreachable for normalized agents: a positive tail implies an
            // out-of-core trace.
            None => {
                return Ok(TightnessCertificate {
                    delta,
                    core,
                    attained_tail: tail,
                })
            }
        }
    }
}

/// How one policy distributes over one task's candidate traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskPolicy {
    Probabilities(Vec<f64>),
    Logits(Vec<f64>),
    Deterministic(usize),
    Uniform,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl TaskPolicy {
    /// Probability vector over `n` candidates.
    pub fn distribution(&self, n: usize) -> Result<Vec<f64>, String> {
        match self {
            TaskPolicy::Probabilities(p) => {
                if p.len() != n {
                    return Err(format!("{} probabilities for {n} candidates", p.len()));
                }
                if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
                    return Err("negative probability".into());
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(format!("probabilities sum to {s}"));
                }
                Ok(p.clone())
            }
            TaskPolicy::Logits(l) => {
                if l.len() != n {
                    return Err(format!("{} logits for {n} candidates", l.len()));
                }
                if l.iter().any(|x| !x.is_finite()) {
                    return Err("non-finite logit".into());
                }
                Ok(softmax(l))
            }
            TaskPolicy::Deterministic(i) => {
                if *i >= n {
                    return Err(format!("candidate {i} of {n}"));
                }
                let mut p = vec![0.0; n];
                p[*i] = 1.0;
                Ok(p)
            }
            TaskPolicy::Uniform => {
                if n == 0 {
                    return Err("no candidates".into());
                }
                Ok(vec![1.0 / n as f64; n])
            }
        }
    }
}

/// A policy over a battery: one task policy per task, in task order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub label: String,
    pub tasks: Vec<TaskPolicy>,
}

impl AgentPolicy {
    pub fn new(label: impl Into<String>, tasks: Vec<TaskPolicy>) -> Self {
        Self {
            label: label.into(),
            tasks,
        }
    }

    /// Per-task candidate distributions, validated against `battery`.
    pub fn distributions(&self, battery: &Battery) -> Result<Vec<Vec<f64>>, AgentError> {
        if self.tasks.len() != battery.tasks().len() {
            return Err(AgentError::BadPolicy {
                policy: self.label.clone(),
                task: "*".into(),
                reason: format!(
                    "{} task policies for {} tasks",
                    self.tasks.len(),
                    battery.tasks().len()
                ),
            });
        }
        self.tasks
            .iter()
            .zip(battery.tasks())
            .map(|(tp, task)| {
                tp.distribution(task.candidates().len())
                    .map_err(|reason| AgentError::BadPolicy {
                        policy: self.label.clone(),
                        task: task.id().to_string(),
                        reason,
                    })
            })
            .collect()
    }
}

/// The induced class `{P_{t,θ}}` of trace laws on one task.
pub fn per_task_trace_laws(
    battery: &Battery,
    policies: &[AgentPolicy],
    task_id: &str,
) -> Result<AgentClass, AgentError> {
    let t = battery
        .task_index(task_id)
        .ok_or_else(|| AgentError::UnknownTask(task_id.to_string()))?;
    let task = &battery.tasks()[t];
    let agents = policies
        .iter()
        .map(|pol| {
            let probs = pol.distributions(battery)?.swap_remove(t);
            Agent::new(task.candidates().iter().cloned().zip(probs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    AgentClass::new(format!("{}@{}", battery.id(), task_id), agents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{Formality, Task};
    use proptest::prelude::*;

    fn t(s: &str) -> Trace {
        Trace::from(s)
    }

    fn half_ab() -> Agent {
        Agent::new([(t("a"), 0.5), (t("b"), 0.5)]).unwrap()
    }

    #[test]
    fn construction_validates_mass() {
        assert!(matches!(
            Agent::new([(t("a"), 0.5), (t("b"), 0.4)]),
            Err(AgentError::NotNormalized(_))
        ));
        assert!(Agent::new([(t("a"), -0.5), (t("b"), 1.5)]).is_err());
        let merged = Agent::new([(t("a"), 0.25), (t("a"), 0.75)]).unwrap();
        assert_eq!(merged.mass(&t("a")), 1.0);
        assert!(AgentClass::new("x", vec![]).is_err());
    }

    #[test]
    fn point_mass_and_expectation() {
        let p = point_mass(t("ab"));
        assert_eq!(p.mass(&t("ab")), 1.0);
        assert_eq!(point_mass(t("")).mass(&t("")), 1.0);
        let ind = Scorer::ExactMatch(t("ab"));
        assert_eq!(agent_expectation(&p, &ind), 1.0);
        assert_eq!(
            agent_expectation(&half_ab(), &Scorer::ExactMatch(t("a"))),
            0.5
        );
        assert_eq!(agent_expectation(&half_ab(), &Scorer::Const(0.0)), 0.0);
    }

    #[test]
    fn tightness_examples() {
        let c = AgentClass::new("d", vec![point_mass(t("a"))]).unwrap();
        let cert = tightness_core(&c, 0.5).unwrap();
        assert_eq!(cert.core, BTreeSet::from([t("a")]));
        assert_eq!(cert.attained_tail, 0.0);

        let c = AgentClass::new("m", vec![half_ab()]).unwrap();
        let cert = tightness_core(&c, 0.5).unwrap();
        assert_eq!(cert.core.len(), 1);
        assert_eq!(cert.attained_tail, 0.5);

        let cert = tightness_core(&c, 1.0).unwrap();
        assert!(cert.core.is_empty());
        assert!(cert.attained_tail <= 1.0);

        assert!(tightness_core(&c, 0.0).is_err());
        assert!(tightness_core(&c, 1.5).is_err());
    }

    #[test]
    fn trace_laws_from_policies() {
        let cands = vec![t("x"), t("y"), t("z")];
        let task = Task::new("t1", Scorer::Const(0.0), cands, vec![], Formality::Formal);
        let b = Battery::new("b", vec![task.unwrap()], vec![1.0], 0).unwrap();
        let pols = vec![
            AgentPolicy::new("u", vec![TaskPolicy::Probabilities(vec![0.5, 0.5, 0.0])]),
            AgentPolicy::new("d", vec![TaskPolicy::Deterministic(2)]),
            AgentPolicy::new("s", vec![TaskPolicy::Logits(vec![0.0, 0.0, 3f64.ln()])]),
        ];
        let class = per_task_trace_laws(&b, &pols, "t1").unwrap();
        let a = &class.agents();
        assert_eq!(a[0].mass(&t("x")), 0.5);
        assert_eq!(a[0].support_len(), 2);
        assert_eq!(a[1], point_mass(t("z")));
        for (tr, want) in [("x", 0.2), ("y", 0.2), ("z", 0.6)] {
            assert!((a[2].mass(&t(tr)) - want).abs() < 1e-15);
        }
        assert!(matches!(
            per_task_trace_laws(&b, &pols, "nope"),
            Err(AgentError::UnknownTask(_))
        ));
    }

    fn arb_agent() -> impl Strategy<Value = Agent> {
        proptest::collection::vec(0.01f64..1.0, 1..8).prop_map(|w| {
            let z: f64 = w.iter().sum();
            let traces = ["", "a", "b", "aa", "ab", "ba", "bb", "aaa"];
            let mut masses: Vec<(Trace, f64)> = w
                .iter()
                .enumerate()
                .map(|(i, x)| (t(traces[i]), x / z))
                .collect();
            // Push rounding drift into the last entry.
            let head: f64 = masses[..masses.len() - 1].iter().map(|m| m.1).sum();
            masses.last_mut().unwrap().1 = 1.0 - head;
            Agent::new(masses).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tightness_postcondition_and_nesting(
            agents in proptest::collection::vec(arb_agent(), 1..4),
            d1 in 0.01f64..1.0,
            d2 in 0.01f64..1.0,
        ) {
            let class = AgentClass::new("r", agents).unwrap();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let small = tightness_core(&class, lo).unwrap();
            let big = tightness_core(&class, hi).unwrap();
            let worst = class.agents().iter().map(|a| a.tail_mass(&small.core)).fold(0.0, f64::max);
            prop_assert_eq!(worst, small.attained_tail);
            prop_assert!(small.attained_tail <= lo);
            prop_assert!(big.attained_tail <= hi);
            prop_assert!(small.core.is_superset(&big.core));
        }

        #[test]
        fn agents_stay_normalized(a in arb_agent()) {
            let total: f64 = a.iter().map(|(_, m)| m).sum();
            prop_assert!((total - 1.0).abs() <= NORMALIZATION_TOL);
        }
    }
}
