//! Multi-task batteries, evaluation laws, a Lipschitz capability
//! functional, the bounded-Lipschitz distance, and the density pipeline
//! that swaps every scorer for a code-algebra approximation.
//!
//! An episode on a battery draws one candidate trace per task,
//! independently, from the policy. The evaluation point is
//! `(q, r)` with `q_t = S_t(ω_t)` and `r = Σ_t μ_t · R(t, ω_t)`, where `μ`
//! is the battery's sampling law over tasks. The evaluation space carries
//! the metric `Σ_t |q_t − q'_t| + ‖r − r'‖₁`.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{per_task_trace_laws, AgentError, AgentPolicy, NORMALIZATION_TOL};
use crate::kernel::{library_battery, Library, LibraryGoal, ResourceModel};
use crate::lp::{Cmp, LinearProgram, LpError};
use crate::par;
use crate::rng;
use crate::scorer::{approx_on_core, express_in_code_algebra, Scorer, ScorerError};
use crate::trace::Trace;

/// Slack allowed when comparing a computed quantity against its bound.
pub const CHECK_TOL: f64 = 1e-9;

/// Largest exact-mode product of per-task supports.
pub const MAX_EXACT_ATOMS: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatteryError {
    #[error("battery {0:?} has no tasks")]
    NoTasks(String),
    #[error("task {0:?} has no candidate traces")]
    NoCandidates(String),
    #[error("duplicate task id {0:?}")]
    DuplicateTask(String),
    #[error("sampling weights: {0}")]
    Weights(String),
    #[error("task {task:?}: {reason}")]
    Resources { task: String, reason: String },
    #[error("task {task:?}: score {value} of candidate {trace:?} lies outside [0, 1] and would be clamped")]
    ClampActive {
        task: String,
        trace: String,
        value: f64,
    },
    #[error("evaluation law: {0}")]
    Law(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("capability spec: {0}")]
    Spec(String),
    #[error("exact evaluation needs {0} atoms, above the cap")]
    TooManyAtoms(usize),
    #[error("bounded-Lipschitz LP on {points} points failed: {source}")]
    Lp { points: usize, source: LpError },
    #[error("episodes must be at least 1")]
    NoEpisodes,
    #[error("batteries are not comparable: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formality {
    #[default]
    Informal,
    SemiFormal,
    Formal,
}

/// One task with its scorer, candidate traces, and per-candidate resources.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    id: String,
    scorer: Scorer,
    candidates: Vec<Trace>,
    resources: Vec<Vec<f64>>,
    formality: Formality,
    scores: Vec<f64>,
}

impl Task {
    /// `resources` is either empty (all zero) or one vector per candidate.
    pub fn new(
        id: impl Into<String>,
        scorer: Scorer,
        candidates: Vec<Trace>,
        resources: Vec<Vec<f64>>,
        formality: Formality,
    ) -> Result<Self, BatteryError> {
        let id = id.into();
        if candidates.is_empty() {
            return Err(BatteryError::NoCandidates(id));
        }
        Ok(Self {
            id,
            scorer,
            candidates,
            resources,
            formality,
            scores: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn candidates(&self) -> &[Trace] {
        &self.candidates
    }

    pub fn formality(&self) -> Formality {
        self.formality
    }

    /// Clamped score of candidate `c`.
    pub fn score(&self, c: usize) -> f64 {
        self.scores[c]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn resource(&self, c: usize) -> &[f64] {
        &self.resources[c]
    }

    pub fn candidate_index(&self, trace: &Trace) -> Option<usize> {
        self.candidates.iter().position(|t| t == trace)
    }
}

/// Battery construction switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatteryOptions {
    /// When false, a candidate whose raw score lies outside `[0, 1]` is a
    /// construction error instead of being clamped.
    pub allow_clamping: bool,
}

/// A finite multi-task battery.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    id: String,
    tasks: Vec<Task>,
    weights: Vec<f64>,
    resource_dims: usize,
    options: BatteryOptions,
    /// Threshold scores; carried as metadata only.
    pub thresholds: Vec<f64>,
    /// Drift labels; carried as metadata only.
    pub drifts: Vec<String>,
}

impl Battery {
    pub fn new(
        id: impl Into<String>,
        tasks: Vec<Task>,
        weights: Vec<f64>,
        resource_dims: usize,
    ) -> Result<Self, BatteryError> {
        Self::with_options(id, tasks, weights, resource_dims, BatteryOptions::default())
    }

    pub fn with_options(
        id: impl Into<String>,
        mut tasks: Vec<Task>,
        weights: Vec<f64>,
        resource_dims: usize,
        options: BatteryOptions,
    ) -> Result<Self, BatteryError> {
        let id = id.into();
        if tasks.is_empty() {
            return Err(BatteryError::NoTasks(id));
        }
        if weights.len() != tasks.len() {
            return Err(BatteryError::Weights(format!(
                "{} weights for {} tasks",
                weights.len(),
                tasks.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BatteryError::Weights("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BatteryError::Weights(format!("weights sum to {total}")));
        }
        for (i, t) in tasks.iter().enumerate() {
            if tasks[..i].iter().any(|u| u.id == t.id) {
                return Err(BatteryError::DuplicateTask(t.id.clone()));
            }
        }
        for task in &mut tasks {
            if task.resources.is_empty() {
                task.resources = vec![vec![0.0; resource_dims]; task.candidates.len()];
            }
            if task.resources.len() != task.candidates.len() {
                return Err(BatteryError::Resources {
                    task: task.id.clone(),
                    reason: format!(
                        "{} resource vectors for {} candidates",
                        task.resources.len(),
                        task.candidates.len()
                    ),
                });
            }
            for r in &task.resources {
                if r.len() != resource_dims {
                    return Err(BatteryError::Resources {
                        task: task.id.clone(),
                        reason: format!(
                            "resource vector of length {}, expected {resource_dims}",
                            r.len()
                        ),
                    });
                }
                if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(BatteryError::Resources {
                        task: task.id.clone(),
                        reason: "negative resource".into(),
                    });
                }
            }
            let raw = par::map(&task.candidates, |c| task.scorer.score(c));
            if !options.allow_clamping {
                if let Some((c, &v)) = raw
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(0.0..=1.0).contains(*v))
                {
                    return Err(BatteryError::ClampActive {
                        task: task.id.clone(),
                        trace: task.candidates[c].as_str().to_string(),
                        value: v,
                    });
                }
            }
            task.scores = raw.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        }
        Ok(Self {
            id,
            tasks,
            weights,
            resource_dims,
            options,
            thresholds: Vec::new(),
            drifts: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn resource_dims(&self) -> usize {
        self.resource_dims
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    /// Clamped score of an arbitrary trace on task `t`.
    pub fn score_trace(&self, t: usize, trace: &Trace) -> f64 {
        let task = &self.tasks[t];
        match task.candidate_index(trace) {
            Some(c) => task.scores[c],
            None => task.scorer.score_clamped(trace),
        }
    }

    /// The same battery with every scorer replaced; everything else kept.
    pub fn with_scorers(
        &self,
        id: impl Into<String>,
        scorers: Vec<Scorer>,
    ) -> Result<Battery, BatteryError> {
        if scorers.len() != self.tasks.len() {
            return Err(BatteryError::Incompatible(format!(
                "{} scorers for {} tasks",
                scorers.len(),
                self.tasks.len()
            )));
        }
        let tasks = self
            .tasks
            .iter()
            .zip(scorers)
            .map(|(t, s)| Task {
                scorer: s,
                scores: Vec::new(),
                ..t.clone()
            })
            .collect();
        let mut b = Battery::with_options(
            id,
            tasks,
            self.weights.clone(),
            self.resource_dims,
            self.options,
        )?;
        b.thresholds = self.thresholds.clone();
        b.drifts = self.drifts.clone();
        Ok(b)
    }

    fn episode_resource(&self, choice: &[usize]) -> Vec<f64> {
        let mut r = vec![0.0; self.resource_dims];
        for (t, &c) in choice.iter().enumerate() {
            for (acc, x) in r.iter_mut().zip(self.tasks[t].resource(c)) {
                *acc += self.weights[t] * x;
            }
        }
        r
    }

    fn episode_point(&self, choice: &[usize]) -> EvalPoint {
        EvalPoint {
            q: choice
                .iter()
                .enumerate()
                .map(|(t, &c)| self.tasks[t].scores[c])
                .collect(),
            r: self.episode_resource(choice),
        }
    }
}

/// A point `(q, r)` of the evaluation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl EvalPoint {
    pub fn new(q: Vec<f64>, r: Vec<f64>) -> Self {
        Self { q, r }
    }

    fn key(&self) -> Vec<u64> {
        self.q
            .iter()
            .chain(&self.r)
            .map(|x| (x + 0.0).to_bits())
            .chain(std::iter::once(self.q.len() as u64))
            .collect()
    }
}

/// `d_X((q, r), (q', r')) = Σ_t |q_t − q'_t| + ‖r − r'‖₁`.
pub fn ground_distance(a: &EvalPoint, b: &EvalPoint) -> f64 {
    let dq: f64 = a.q.iter().zip(&b.q).map(|(x, y)| (x - y).abs()).sum();
    let dr: f64 = a.r.iter().zip(&b.r).map(|(x, y)| (x - y).abs()).sum();
    dq + dr
}

/// A finitely supported law on the evaluation space. Atoms at identical
/// points are merged and kept in a canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationLaw {
    atoms: Vec<(EvalPoint, f64)>,
}

impl EvaluationLaw {
    pub fn new(atoms: impl IntoIterator<Item = (EvalPoint, f64)>) -> Result<Self, BatteryError> {
        let mut merged: BTreeMap<Vec<u64>, (EvalPoint, f64)> = BTreeMap::new();
        let mut dims: Option<(usize, usize)> = None;
        for (pt, p) in atoms {
            if !p.is_finite() || p < 0.0 {
                return Err(BatteryError::Law(format!("bad probability {p}")));
            }
            if pt.q.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(BatteryError::Law(format!(
                    "score outside [0, 1] in {:?}",
                    pt.q
                )));
            }
            if pt.r.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(BatteryError::Law(format!(
                    "negative resource in {:?}",
                    pt.r
                )));
            }
            let d = (pt.q.len(), pt.r.len());
            if *dims.get_or_insert(d) != d {
                return Err(BatteryError::Dimension("atoms of different shapes".into()));
            }
            if p == 0.0 {
                continue;
            }
            merged.entry(pt.key()).or_insert_with(|| (pt, 0.0)).1 += p;
        }
        let atoms: Vec<(EvalPoint, f64)> = merged.into_values().collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BatteryError::Law(format!("probabilities sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn dirac(point: EvalPoint) -> Self {
        Self {
            atoms: vec![(point, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(EvalPoint, f64)] {
        &self.atoms
    }

    pub fn dims(&self) -> (usize, usize) {
        let p = &self.atoms[0].0;
        (p.q.len(), p.r.len())
    }

    pub fn mass_at(&self, point: &EvalPoint) -> f64 {
        let k = point.key();
        self.atoms
            .iter()
            .find(|(p, _)| p.key() == k)
            .map(|a| a.1)
            .unwrap_or(0.0)
    }
}

/// How to build the law `ρ_B(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Closed form over the product of per-task supports.
    Exact,
    /// Empirical law of seeded episodes.
    Sampled { episodes: usize, seed: u64 },
}

/// Inverse-CDF lookup of `u ∈ [0, 1)` in `probs`.
pub fn quantile_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws a candidate index from `probs` with one uniform variate.
pub fn sample_index(probs: &[f64], rng: &mut rng::Rng) -> usize {
    quantile_index(probs, rng.gen::<f64>())
}

/// `ρ_B(θ)` for one policy.
pub fn evaluate(
    battery: &Battery,
    policy: &AgentPolicy,
    mode: EvalMode,
) -> Result<EvaluationLaw, BatteryError> {
    let dists = policy.distributions(battery)?;
    match mode {
        EvalMode::Exact => exact_law(battery, &dists),
        EvalMode::Sampled { episodes, seed } => {
            if episodes == 0 {
                return Err(BatteryError::NoEpisodes);
            }
            let points = par::map_range(episodes, |e| {
                let mut r = rng::keyed(seed, &[e as u64]);
                let choice: Vec<usize> = dists.iter().map(|p| sample_index(p, &mut r)).collect();
                battery.episode_point(&choice)
            });
            let mut counts: BTreeMap<Vec<u64>, (EvalPoint, usize)> = BTreeMap::new();
            for pt in points {
                counts.entry(pt.key()).or_insert_with(|| (pt, 0)).1 += 1;
            }
            EvaluationLaw::new(
                counts
                    .into_values()
                    .map(|(p, n)| (p, n as f64 / episodes as f64)),
            )
        }
    }
}

fn exact_law(battery: &Battery, dists: &[Vec<f64>]) -> Result<EvaluationLaw, BatteryError> {
    let supports: Vec<Vec<(usize, f64)>> = dists
        .iter()
        .map(|p| {
            p.iter()
                .copied()
                .enumerate()
                .filter(|(_, x)| *x > 0.0)
                .collect()
        })
        .collect();
    let size = supports
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
        .unwrap_or(usize::MAX);
    if size > MAX_EXACT_ATOMS {
        return Err(BatteryError::TooManyAtoms(size));
    }
    let mut atoms = Vec::with_capacity(size);
    let mut idx = vec![0usize; supports.len()];
    loop {
        let choice: Vec<usize> = idx.iter().zip(&supports).map(|(&i, s)| s[i].0).collect();
        let p: f64 = idx.iter().zip(&supports).map(|(&i, s)| s[i].1).product();
        atoms.push((battery.episode_point(&choice), p));
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == idx.len() {
                return EvaluationLaw::new(atoms);
            }
            idx[k] += 1;
            if idx[k] < supports[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// A linear capability functional
/// `Φ(ν) = E_ν[Σ_t w_t q_t − λ · min(‖r‖₁, C_max)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AaiRecord", into = "AaiRecord")]
pub struct AaiSpec {
    task_weights: Vec<f64>,
    cost_weight: f64,
    cost_cap: f64,
    lipschitz: f64,
}

#[derive(Serialize, Deserialize)]
struct AaiRecord {
    task_weights: Vec<f64>,
    #[serde(default)]
    cost_weight: f64,
    #[serde(default = "default_cap")]
    cost_cap: f64,
}

fn default_cap() -> f64 {
    1.0
}

impl TryFrom<AaiRecord> for AaiSpec {
    type Error = BatteryError;

    fn try_from(r: AaiRecord) -> Result<Self, Self::Error> {
        AaiSpec::new(r.task_weights, r.cost_weight, r.cost_cap)
    }
}

impl From<AaiSpec> for AaiRecord {
    fn from(s: AaiSpec) -> Self {
        AaiRecord {
            task_weights: s.task_weights,
            cost_weight: s.cost_weight,
            cost_cap: s.cost_cap,
        }
    }
}

impl AaiSpec {
    pub fn new(
        task_weights: Vec<f64>,
        cost_weight: f64,
        cost_cap: f64,
    ) -> Result<Self, BatteryError> {
        if task_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BatteryError::Spec(
                "task weights must be nonnegative".into(),
            ));
        }
        if !cost_weight.is_finite() || cost_weight < 0.0 {
            return Err(BatteryError::Spec("cost weight must be nonnegative".into()));
        }
        if !(cost_cap.is_finite() && cost_cap > 0.0) {
            return Err(BatteryError::Spec("cost cap must be positive".into()));
        }
        // sup |ψ| over the evaluation space: ψ ranges over [−λC, Σw].
        let sup = task_weights.iter().sum::<f64>().max(cost_weight * cost_cap);
        // Lipschitz constant of ψ for the product metric.
        let lip = task_weights.iter().copied().fold(cost_weight, f64::max);
        let lipschitz = sup.max(lip);
        if !(lipschitz > 0.0) {
            return Err(BatteryError::Spec("functional is identically zero".into()));
        }
        Ok(Self {
            task_weights,
            cost_weight,
            cost_cap,
            lipschitz,
        })
    }

    /// Task weights equal to the battery's sampling law, no cost term.
    pub fn success_only(battery: &Battery) -> Result<Self, BatteryError> {
        Self::new(battery.weights().to_vec(), 0.0, 1.0)
    }

    pub fn task_weights(&self) -> &[f64] {
        &self.task_weights
    }

    pub fn cost_weight(&self) -> f64 {
        self.cost_weight
    }

    pub fn cost_cap(&self) -> f64 {
        self.cost_cap
    }

    /// `L = max(‖ψ‖_∞, Lip(ψ))`; `ψ / L` lies in the unit BL ball.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn cost(&self, r: &[f64]) -> f64 {
        r.iter().sum::<f64>().min(self.cost_cap)
    }

    pub fn psi(&self, p: &EvalPoint) -> f64 {
        let gain: f64 = self.task_weights.iter().zip(&p.q).map(|(w, q)| w * q).sum();
        gain - self.cost_weight * self.cost(&p.r)
    }
}

/// `Φ(ν) = Σ_atoms p · ψ(q, r)`.
pub fn aai_capability(spec: &AaiSpec, law: &EvaluationLaw) -> Result<f64, BatteryError> {
    let (t, _) = law.dims();
    if t != spec.task_weights.len() {
        return Err(BatteryError::Dimension(format!(
            "{} task weights for a {t}-task law",
            spec.task_weights.len()
        )));
    }
    Ok(law.atoms().iter().map(|(p, m)| m * spec.psi(p)).sum())
}

/// `F_B(θ)` via the exact law.
pub fn battery_capability(
    battery: &Battery,
    policy: &AgentPolicy,
    spec: &AaiSpec,
) -> Result<f64, BatteryError> {
    aai_capability(spec, &evaluate(battery, policy, EvalMode::Exact)?)
}

/// Optimal value and witness of the bounded-Lipschitz LP.
#[derive(Debug, Clone, PartialEq)]
pub struct BlSolution {
    pub value: f64,
    /// `φ` on each point with nonzero signed mass.
    pub witness: Vec<f64>,
    pub pivots: usize,
}

/// Bounded-Lipschitz LP on an abstract finite metric space.
///
/// Maximizes `Σ_x φ(x) m(x)` subject to `|φ| ≤ 1` and
/// `φ(x) − φ(y) ≤ d(x, y)`, where `m` is the signed mass `μ − ν`.
/// Solved in the shifted variable `u = φ + 1 ≥ 0`.
pub fn bl_lp(dist: &[Vec<f64>], signed_mass: &[f64]) -> Result<BlSolution, LpError> {
    let n = signed_mass.len();
    let shift: f64 = signed_mass.iter().sum();
    let mut lp = LinearProgram::new(n, signed_mass.to_vec());
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        lp.push(row, Cmp::Le, 2.0);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row[j] = -1.0;
                lp.push(row, Cmp::Le, dist[i][j]);
            }
        }
    }
    let sol = lp.solve()?;
    let witness: Vec<f64> = sol.x.iter().map(|u| u - 1.0).collect();
    Ok(BlSolution {
        value: sol.value - shift,
        witness,
        pivots: sol.pivots,
    })
}

/// Union support of two laws with signed masses `μ(x) − ν(x)`; points where
/// the masses cancel exactly are dropped, as they constrain nothing that a
/// bounded Lipschitz extension could not restore.
pub fn signed_support(mu: &EvaluationLaw, nu: &EvaluationLaw) -> Vec<(EvalPoint, f64)> {
    let mut m: BTreeMap<Vec<u64>, (EvalPoint, f64)> = BTreeMap::new();
    for (p, w) in mu.atoms() {
        m.entry(p.key()).or_insert_with(|| (p.clone(), 0.0)).1 += w;
    }
    for (p, w) in nu.atoms() {
        m.entry(p.key()).or_insert_with(|| (p.clone(), 0.0)).1 -= w;
    }
    m.into_values().filter(|(_, w)| *w != 0.0).collect()
}

/// `d_BL(μ, ν)` with the evaluation-space metric, plus a witness `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlDistance {
    pub value: f64,
    pub witness: Vec<(EvalPoint, f64)>,
}

pub fn bl_distance(mu: &EvaluationLaw, nu: &EvaluationLaw) -> Result<BlDistance, BatteryError> {
    if mu.dims() != nu.dims() {
        return Err(BatteryError::Dimension("laws on different spaces".into()));
    }
    let support = signed_support(mu, nu);
    if support.is_empty() {
        return Ok(BlDistance {
            value: 0.0,
            witness: Vec::new(),
        });
    }
    let dist: Vec<Vec<f64>> = support
        .iter()
        .map(|(a, _)| support.iter().map(|(b, _)| ground_distance(a, b)).collect())
        .collect();
    let masses: Vec<f64> = support.iter().map(|a| a.1).collect();
    let sol = bl_lp(&dist, &masses).map_err(|source| BatteryError::Lp {
        points: support.len(),
        source,
    })?;
    Ok(BlDistance {
        value: sol.value.max(0.0),
        witness: support.into_iter().map(|a| a.0).zip(sol.witness).collect(),
    })
}

/// `½ Σ_x |μ(x) − ν(x)|`.
pub fn total_variation(mu: &EvaluationLaw, nu: &EvaluationLaw) -> f64 {
    0.5 * signed_support(mu, nu)
        .iter()
        .map(|a| a.1.abs())
        .sum::<f64>()
}

/// `W_1(μ, ν)` for the evaluation-space metric, by the primal transport LP.
pub fn wasserstein1(mu: &EvaluationLaw, nu: &EvaluationLaw) -> Result<f64, BatteryError> {
    let (a, b) = (mu.atoms(), nu.atoms());
    let (n, m) = (a.len(), b.len());
    let mut cost = Vec::with_capacity(n * m);
    for (x, _) in a {
        for (y, _) in b {
            cost.push(-ground_distance(x, y));
        }
    }
    let mut lp = LinearProgram::new(n * m, cost);
    for (i, (_, w)) in a.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        row[i * m..(i + 1) * m].fill(1.0);
        lp.push(row, Cmp::Eq, *w);
    }
    for (j, (_, w)) in b.iter().enumerate() {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        lp.push(row, Cmp::Eq, *w);
    }
    let sol = lp.solve().map_err(|source| BatteryError::Lp {
        points: n + m,
        source,
    })?;
    Ok(-sol.value)
}

/// One atom of a coupling of `(Z, R)` and `(Z', R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledAtom {
    pub z: Vec<f64>,
    pub z_prime: Vec<f64>,
    pub r: Vec<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `d_BL(law(Z, R), law(Z', R)) ≤ E[Σ_t |Z_t − Z'_t|]` on a finite coupling.
pub fn coupling_bound_check(paired: &[CoupledAtom]) -> Result<BoundCheck, BatteryError> {
    let mu = EvaluationLaw::new(
        paired
            .iter()
            .map(|a| (EvalPoint::new(a.z.clone(), a.r.clone()), a.p)),
    )?;
    let nu = EvaluationLaw::new(
        paired
            .iter()
            .map(|a| (EvalPoint::new(a.z_prime.clone(), a.r.clone()), a.p)),
    )?;
    let lhs = bl_distance(&mu, &nu)?.value;
    let rhs: f64 = paired
        .iter()
        .map(|a| {
            a.p * a
                .z
                .iter()
                .zip(&a.z_prime)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(BoundCheck {
        lhs,
        rhs,
        pass: lhs <= rhs + CHECK_TOL,
    })
}

/// `|Φ(μ) − Φ(ν)| ≤ L · d_BL(μ, ν)`.
pub fn lipschitz_check(
    spec: &AaiSpec,
    mu: &EvaluationLaw,
    nu: &EvaluationLaw,
) -> Result<BoundCheck, BatteryError> {
    let gap = (aai_capability(spec, mu)? - aai_capability(spec, nu)?).abs();
    let bound = spec.lipschitz() * bl_distance(mu, nu)?.value;
    Ok(BoundCheck {
        lhs: gap,
        rhs: bound,
        pass: gap <= bound + CHECK_TOL,
    })
}

/// The worst policy and its capability gap between two batteries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyGap {
    pub value: f64,
    pub policy_index: usize,
}

/// `d_{𝒜_Θ}(B1, B2) = max_θ |F_{B1}(θ) − F_{B2}(θ)|` over a finite list.
pub fn eval_distance_general(
    b1: &Battery,
    b2: &Battery,
    policies: &[AgentPolicy],
    spec: &AaiSpec,
) -> Result<PolicyGap, BatteryError> {
    let gaps = par::try_map(policies, |p| {
        Ok::<f64, BatteryError>(
            (battery_capability(b1, p, spec)? - battery_capability(b2, p, spec)?).abs(),
        )
    })?;
    let (policy_index, value) =
        gaps.into_iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    Ok(PolicyGap {
        value,
        policy_index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskApprox {
    pub task: String,
    pub budget: f64,
    pub attained_tail: f64,
    pub core_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyApprox {
    pub policy: String,
    pub original: f64,
    pub approximated: f64,
    pub gap: f64,
    /// `E[Σ_t |Z_t − Z'_t|]` under the same-trace coupling.
    pub coupling_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub epsilon: f64,
    pub lipschitz: f64,
    pub per_task: Vec<TaskApprox>,
    /// `Σ_t` attained tails; bounds every `d_BL(ρ_B(θ), ρ_{B'}(θ))`.
    pub bl_bound: f64,
    /// `ε / (2L)`.
    pub bl_budget: f64,
    pub per_policy: Vec<PolicyApprox>,
    pub sup_gap: f64,
}

impl DensityReport {
    /// `sup_θ |F_B − F_{B'}| ≤ ε/2`.
    pub fn passed(&self) -> bool {
        self.sup_gap <= self.epsilon / 2.0 + CHECK_TOL
            && self.bl_bound <= self.bl_budget + CHECK_TOL
            && self.per_policy.iter().all(|p| {
                p.coupling_gap <= self.bl_bound + CHECK_TOL
                    && p.gap <= self.lipschitz * p.coupling_gap + CHECK_TOL
            })
    }
}

/// Replaces every scorer of `battery` by a code-algebra element.
///
/// Each task gets the budget `δ_t = ε / (2 L |T|)`: its scorer is cut down
/// to a tightness core of the induced trace-law class at level `δ_t` and
/// rewritten as a linear combination of coding delta scorers. The report
/// carries the exact capability gap for every policy.
pub fn approximate_battery(
    battery: &Battery,
    policies: &[AgentPolicy],
    epsilon: f64,
    spec: &AaiSpec,
) -> Result<(Battery, DensityReport), BatteryError> {
    if !(epsilon > 0.0) {
        return Err(ScorerError::BadEpsilon(epsilon).into());
    }
    let n_tasks = battery.tasks().len();
    let lipschitz = spec.lipschitz();
    let budget = epsilon / (2.0 * lipschitz * n_tasks as f64);
    let mut scorers = Vec::with_capacity(n_tasks);
    let mut per_task = Vec::with_capacity(n_tasks);
    for (t, task) in battery.tasks().iter().enumerate() {
        let class = per_task_trace_laws(battery, policies, task.id())?;
        let (table, cert) = approx_on_core(|w| battery.score_trace(t, w), &class, budget)?;
        per_task.push(TaskApprox {
            task: task.id().to_string(),
            budget,
            attained_tail: cert.attained_tail,
            core_size: cert.core.len(),
        });
        scorers.push(express_in_code_algebra(&table));
    }
    let approx = battery.with_scorers(format!("{}~code", battery.id()), scorers)?;
    let rows = par::try_map(policies, |p| {
        let original = battery_capability(battery, p, spec)?;
        let approximated = battery_capability(&approx, p, spec)?;
        let dists = p.distributions(battery)?;
        let coupling_gap: f64 = dists
            .iter()
            .enumerate()
            .map(|(t, probs)| {
                probs
                    .iter()
                    .enumerate()
                    .map(|(c, pr)| {
                        pr * (battery.tasks()[t].score(c) - approx.tasks()[t].score(c)).abs()
                    })
                    .sum::<f64>()
            })
            .sum();
        Ok::<_, BatteryError>(PolicyApprox {
            policy: p.label.clone(),
            original,
            approximated,
            gap: (original - approximated).abs(),
            coupling_gap,
        })
    })?;
    let sup_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let report = DensityReport {
        epsilon,
        lipschitz,
        bl_bound: per_task.iter().map(|t| t.attained_tail).sum(),
        bl_budget: epsilon / (2.0 * lipschitz),
        per_task,
        per_policy: rows,
        sup_gap,
    };
    Ok((approx, report))
}

/// Outcome of the library-extension audit for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityRow {
    pub policy: String,
    /// Per task: success law under the larger library dominates.
    pub dominance: Vec<bool>,
    pub cost_small: f64,
    pub cost_large: f64,
    pub hypotheses_met: bool,
    pub capability_small: f64,
    pub capability_large: f64,
}

impl MonotonicityRow {
    pub fn ordering_holds(&self) -> bool {
        self.capability_small <= self.capability_large + 1e-12
    }

    pub fn strict(&self) -> bool {
        self.capability_small + 1e-12 < self.capability_large
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
}

impl MonotonicityReport {
    /// No policy that meets the hypotheses breaks the ordering.
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| !r.hypotheses_met || r.ordering_holds())
    }
}

/// `P(q_t ≥ v)` for every score level `v` of task `t`.
fn survival(task: &crate::battery::Task, probs: &[f64], levels: &[f64]) -> Vec<f64> {
    levels
        .iter()
        .map(|&v| {
            probs
                .iter()
                .enumerate()
                .filter(|(c, _)| task.score(*c) >= v)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

/// Audits `F_{B_small}(θ) ≤ F_{B_large}(θ)` over a policy list.
///
/// The hypotheses are checked on the induced laws: per task, the score law
/// under the large battery first-order dominates the small one (for
/// `{0, 1}` scores this is the increasing concave order on success
/// indicators), and expected capped cost does not increase. The ordering is
/// only asserted for policies that meet both.
pub fn audit_batteries(
    small: &Battery,
    large: &Battery,
    policies: &[AgentPolicy],
    spec: &AaiSpec,
) -> Result<MonotonicityReport, BatteryError> {
    if small.tasks().len() != large.tasks().len()
        || small.weights() != large.weights()
        || small.resource_dims() != large.resource_dims()
        || small
            .tasks()
            .iter()
            .zip(large.tasks())
            .any(|(a, b)| a.id() != b.id() || a.candidates() != b.candidates())
    {
        return Err(BatteryError::Incompatible(
            "batteries must share tasks, candidates, weights and resource dimensions".into(),
        ));
    }
    let rows = par::try_map(policies, |p| {
        let dists = p.distributions(small)?;
        let dominance = small
            .tasks()
            .iter()
            .zip(large.tasks())
            .zip(&dists)
            .map(|((a, b), probs)| {
                let mut levels: Vec<f64> = a.scores().iter().chain(b.scores()).copied().collect();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                let sa = survival(a, probs, &levels);
                let sb = survival(b, probs, &levels);
                sa.iter().zip(&sb).all(|(x, y)| *y >= *x - 1e-12)
            })
            .collect::<Vec<bool>>();
        let law_small = evaluate(small, p, EvalMode::Exact)?;
        let law_large = evaluate(large, p, EvalMode::Exact)?;
        let cost = |law: &EvaluationLaw| {
            law.atoms()
                .iter()
                .map(|(pt, m)| m * spec.cost(&pt.r))
                .sum::<f64>()
        };
        let (cost_small, cost_large) = (cost(&law_small), cost(&law_large));
        let hypotheses_met = dominance.iter().all(|&d| d) && cost_large <= cost_small + 1e-12;
        Ok::<_, BatteryError>(MonotonicityRow {
            policy: p.label.clone(),
            dominance,
            cost_small,
            cost_large,
            hypotheses_met,
            capability_small: aai_capability(spec, &law_small)?,
            capability_large: aai_capability(spec, &law_large)?,
        })
    })?;
    Ok(MonotonicityReport { rows })
}

/// Builds `B(L1)` and `B(L2)` on shared goals and audits the ordering.
pub fn monotonicity_audit(
    small: &Library,
    large: &Library,
    goals: &[LibraryGoal],
    weights: Vec<f64>,
    model: ResourceModel,
    policies: &[AgentPolicy],
    spec: &AaiSpec,
) -> Result<MonotonicityReport, BatteryError> {
    if !small.is_subset_of(large) {
        return Err(BatteryError::Incompatible(format!(
            "library {:?} is not contained in {:?}",
            small.id(),
            large.id()
        )));
    }
    let b1 = library_battery(small, goals, weights.clone(), model)?;
    let b2 = library_battery(large, goals, weights, model)?;
    audit_batteries(&b1, &b2, policies, spec)
}
