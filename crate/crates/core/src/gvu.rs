//! Generator-Verifier-Updater flows on batteries.
//!
//! The generator is a softmax policy over each task's finite candidate
//! list. A round draws a batch per task, scores it with the verifier and
//! applies the score-function update
//! `θ' = θ + η/n · Σ_i (v_i − b) (e_{ω_i} − π_θ(·|t_i))`
//! with `b` the batch mean. Capability is the exact functional at each
//! round, so the recorded curve carries no sampling noise of its own.
//!
//! Every random draw comes from a stream keyed by
//! `(seed, round, task, draw)`, so results do not depend on scheduling.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{softmax, AgentPolicy, TaskPolicy};
use crate::battery::{battery_capability, quantile_index, AaiSpec, Battery, BatteryError};
use crate::kernel::{kernel_check, library_battery, Library, LibraryGoal, ResourceModel};
use crate::par;
use crate::rng::{self, Rng};
use crate::trace::Trace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GvuError {
    #[error("task index {0} out of range")]
    UnknownTask(usize),
    #[error("task {0:?} has no candidates")]
    EmptyCandidates(String),
    #[error("{0} logits for task {1:?} with {2} candidates")]
    LogitShape(usize, String, usize),
    #[error("non-finite logit")]
    NonFinite,
    #[error("noise level {0} outside [0, 0.5]")]
    BadNoise(f64),
    #[error("noisy verifier needs a binary score; task {task:?} scores {trace:?} as {score}")]
    NonBinary {
        task: String,
        trace: String,
        score: f64,
    },
    #[error("step size must be nonnegative and finite, got {0}")]
    BadStep(f64),
    #[error("empty batch")]
    EmptyBatch,
    #[error("trace {trace:?} is not a candidate of task {task:?}")]
    NotCandidate { task: String, trace: String },
    #[error("{what} must be at least {min}, got {got}")]
    TooFew {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("round {round} outside a curve of {len} points")]
    OutOfRange { round: usize, len: usize },
    #[error("library extension: {0}")]
    Extension(String),
    #[error(transparent)]
    Battery(#[from] BatteryError),
}

/// Per-task logits `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    logits: Vec<Vec<f64>>,
}

impl GeneratorParams {
    pub fn new(logits: Vec<Vec<f64>>) -> Result<Self, GvuError> {
        if logits.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GvuError::NonFinite);
        }
        Ok(Self { logits })
    }

    /// All-zero logits, i.e. the uniform policy on every task.
    pub fn uniform(battery: &Battery) -> Self {
        Self {
            logits: battery
                .tasks()
                .iter()
                .map(|t| vec![0.0; t.candidates().len()])
                .collect(),
        }
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn probabilities(&self, t: usize) -> Vec<f64> {
        softmax(&self.logits[t])
    }

    pub fn policy(&self, label: impl Into<String>) -> AgentPolicy {
        AgentPolicy::new(
            label,
            self.logits
                .iter()
                .cloned()
                .map(TaskPolicy::Logits)
                .collect(),
        )
    }

    fn check(&self, battery: &Battery) -> Result<(), GvuError> {
        if self.logits.len() != battery.tasks().len() {
            return Err(GvuError::LogitShape(
                self.logits.len(),
                battery.id().into(),
                battery.tasks().len(),
            ));
        }
        for (l, task) in self.logits.iter().zip(battery.tasks()) {
            if l.len() != task.candidates().len() {
                return Err(GvuError::LogitShape(
                    l.len(),
                    task.id().into(),
                    task.candidates().len(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-(task, trace) internal potential; unlisted pairs score 0.
pub type Potential = BTreeMap<String, BTreeMap<Trace, f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierMode {
    /// The battery's own scorer.
    Oracle,
    /// The battery's binary score, flipped independently with probability `p`.
    NoisyFlip(f64),
    /// A fixed potential unrelated to the battery's scores.
    Misaligned(Potential),
}

impl VerifierMode {
    fn check(&self) -> Result<(), GvuError> {
        match self {
            VerifierMode::NoisyFlip(p) if !(0.0..=0.5).contains(p) => Err(GvuError::BadNoise(*p)),
            _ => Ok(()),
        }
    }
}

/// How a batch of `n` candidates is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Independent draws.
    #[default]
    Iid,
    /// One uniform offset `U`, draws at quantiles `(i + U) / n`. Each draw is
    /// marginally exact, so batch averages stay unbiased with `O(1/n)` error.
    Systematic,
}

fn task_probs(theta: &GeneratorParams, battery: &Battery, t: usize) -> Result<Vec<f64>, GvuError> {
    let task = battery.tasks().get(t).ok_or(GvuError::UnknownTask(t))?;
    if task.candidates().is_empty() {
        return Err(GvuError::EmptyCandidates(task.id().into()));
    }
    let l = theta.logits.get(t).ok_or(GvuError::UnknownTask(t))?;
    if l.len() != task.candidates().len() {
        return Err(GvuError::LogitShape(
            l.len(),
            task.id().into(),
            task.candidates().len(),
        ));
    }
    Ok(softmax(l))
}

fn draw_indices(probs: &[f64], n: usize, scheme: SamplingScheme, rng: &mut Rng) -> Vec<usize> {
    match scheme {
        SamplingScheme::Iid => (0..n)
            .map(|_| quantile_index(probs, rng.gen::<f64>()))
            .collect(),
        SamplingScheme::Systematic => {
            let u: f64 = rng.gen();
            (0..n)
                .map(|i| quantile_index(probs, (i as f64 + u) / n as f64))
                .collect()
        }
    }
}

/// `n` draws from `softmax(θ_t)` over task `t`'s candidates.
pub fn generate(
    theta: &GeneratorParams,
    battery: &Battery,
    t: usize,
    n: usize,
    rng: &mut Rng,
    scheme: SamplingScheme,
) -> Result<Vec<Trace>, GvuError> {
    if n == 0 {
        return Err(GvuError::TooFew {
            what: "batch size",
            min: 1,
            got: 0,
        });
    }
    let probs = task_probs(theta, battery, t)?;
    let cands = battery.tasks()[t].candidates();
    Ok(draw_indices(&probs, n, scheme, rng)
        .into_iter()
        .map(|i| cands[i].clone())
        .collect())
}

/// One verifier call on trace `w` of task `t`.
pub fn verify(
    mode: &VerifierMode,
    battery: &Battery,
    t: usize,
    w: &Trace,
    rng: &mut Rng,
) -> Result<f64, GvuError> {
    mode.check()?;
    let task = battery.tasks().get(t).ok_or(GvuError::UnknownTask(t))?;
    match mode {
        VerifierMode::Oracle => Ok(battery.score_trace(t, w)),
        VerifierMode::NoisyFlip(p) => {
            let s = battery.score_trace(t, w);
            if s != 0.0 && s != 1.0 {
                return Err(GvuError::NonBinary {
                    task: task.id().into(),
                    trace: w.as_str().into(),
                    score: s,
                });
            }
            let flip = rng.gen::<f64>() < *p;
            Ok(if flip { 1.0 - s } else { s })
        }
        VerifierMode::Misaligned(pot) => Ok(pot
            .get(task.id())
            .and_then(|m| m.get(w))
            .copied()
            .unwrap_or(0.0)),
    }
}

/// One verified sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub task: usize,
    pub trace: Trace,
    pub score: f64,
}

/// `(1/n) Σ_i (v_i − b) (e_{ω_i} − π_θ(·|t_i))` with `b` the batch mean.
pub fn score_function_gradient(
    theta: &GeneratorParams,
    battery: &Battery,
    batch: &[Scored],
) -> Result<Vec<Vec<f64>>, GvuError> {
    if batch.is_empty() {
        return Err(GvuError::EmptyBatch);
    }
    theta.check(battery)?;
    let n = batch.len() as f64;
    let baseline = batch.iter().map(|s| s.score).sum::<f64>() / n;
    let probs: Vec<Vec<f64>> = theta.logits.iter().map(|l| softmax(l)).collect();
    let mut grad: Vec<Vec<f64>> = theta.logits.iter().map(|l| vec![0.0; l.len()]).collect();
    for s in batch {
        let task = battery
            .tasks()
            .get(s.task)
            .ok_or(GvuError::UnknownTask(s.task))?;
        let c = task
            .candidate_index(&s.trace)
            .ok_or_else(|| GvuError::NotCandidate {
                task: task.id().into(),
                trace: s.trace.as_str().into(),
            })?;
        let adv = s.score - baseline;
        if adv == 0.0 {
            continue;
        }
        for (j, (g, p)) in grad[s.task].iter_mut().zip(&probs[s.task]).enumerate() {
            let onehot = if j == c { 1.0 } else { 0.0 };
            *g += adv * (onehot - p);
        }
    }
    for g in grad.iter_mut().flatten() {
        *g /= n;
    }
    Ok(grad)
}

/// `θ + η · score_function_gradient(θ, batch)`.
pub fn update(
    theta: &GeneratorParams,
    battery: &Battery,
    batch: &[Scored],
    eta: f64,
) -> Result<GeneratorParams, GvuError> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(GvuError::BadStep(eta));
    }
    let grad = score_function_gradient(theta, battery, batch)?;
    let logits = theta
        .logits
        .iter()
        .zip(grad)
        .map(|(l, g)| l.iter().zip(g).map(|(x, d)| x + eta * d).collect())
        .collect();
    GeneratorParams::new(logits)
}

/// Estimated decomposition `Var(Q) = E[Var(Q|Ω)] + Var(E[Q|Ω])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceTerms {
    pub total: f64,
    pub intrinsic: f64,
    pub generator: f64,
    /// Standard error of `intrinsic`.
    pub intrinsic_se: f64,
}

impl VarianceTerms {
    /// `|total − intrinsic − generator|`.
    pub fn identity_gap(&self) -> f64 {
        (self.total - self.intrinsic - self.generator).abs()
    }
}

/// Unbiased sample variance, shifted by the first value so that a constant
/// sample gives exactly 0.
fn shifted_variance(xs: &[f64]) -> f64 {
    let k = xs[0];
    let n = xs.len() as f64;
    let (s, s2) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d = x - k;
        (a + d, b + d * d)
    });
    ((s2 - s * s / n) / (n - 1.0)).max(0.0)
}

/// Conditional-variance estimate from an `n × m` table of rescores.
pub fn decompose(table: &[Vec<f64>]) -> VarianceTerms {
    let n = table.len();
    let m = table[0].len() as f64;
    let within: Vec<f64> = table.iter().map(|row| shifted_variance(row)).collect();
    let means: Vec<f64> = table
        .iter()
        .map(|row| row.iter().sum::<f64>() / m)
        .collect();
    let intrinsic = within.iter().sum::<f64>() / n as f64;
    let intrinsic_se = (shifted_variance(&within) / n as f64).sqrt();
    let between = shifted_variance(&means);
    let generator = between - intrinsic / m;
    let all: Vec<f64> = table.iter().flatten().copied().collect();
    VarianceTerms {
        total: shifted_variance(&all),
        intrinsic,
        generator,
        intrinsic_se,
    }
}

fn rescore_table(
    battery: &Battery,
    t: usize,
    traces: &[Trace],
    mode: &VerifierMode,
    rescores: usize,
    seed: u64,
    prefix: &[u64],
) -> Result<Vec<Vec<f64>>, GvuError> {
    par::try_map_range(traces.len(), |i| {
        (0..rescores)
            .map(|j| {
                let mut key = prefix.to_vec();
                key.extend([t as u64, i as u64, 1 + j as u64]);
                verify(mode, battery, t, &traces[i], &mut rng::keyed(seed, &key))
            })
            .collect()
    })
}

fn keyed_batch(
    theta: &GeneratorParams,
    battery: &Battery,
    t: usize,
    n: usize,
    scheme: SamplingScheme,
    seed: u64,
    prefix: &[u64],
) -> Result<Vec<Trace>, GvuError> {
    let probs = task_probs(theta, battery, t)?;
    let cands = battery.tasks()[t].candidates();
    let key = |i: u64| {
        let mut k = prefix.to_vec();
        k.extend([t as u64, i, 0]);
        k
    };
    let idx: Vec<usize> = match scheme {
        SamplingScheme::Iid => par::map_range(n, |i| {
            quantile_index(&probs, rng::keyed(seed, &key(i as u64)).gen::<f64>())
        }),
        SamplingScheme::Systematic => {
            let u: f64 = rng::keyed(seed, &key(u64::MAX)).gen();
            (0..n)
                .map(|i| quantile_index(&probs, (i as f64 + u) / n as f64))
                .collect()
        }
    };
    Ok(idx.into_iter().map(|i| cands[i].clone()).collect())
}

/// Draws `n_traces` traces of task `t` and rescores each `n_rescores` times.
pub fn variance_decomposition(
    battery: &Battery,
    t: usize,
    theta: &GeneratorParams,
    mode: &VerifierMode,
    n_traces: usize,
    n_rescores: usize,
    seed: u64,
) -> Result<VarianceTerms, GvuError> {
    if n_traces < 2 {
        return Err(GvuError::TooFew {
            what: "traces",
            min: 2,
            got: n_traces,
        });
    }
    if n_rescores < 2 {
        return Err(GvuError::TooFew {
            what: "rescores",
            min: 2,
            got: n_rescores,
        });
    }
    mode.check()?;
    let traces = keyed_batch(theta, battery, t, n_traces, SamplingScheme::Iid, seed, &[])?;
    let table = rescore_table(battery, t, &traces, mode, n_rescores, seed, &[])?;
    Ok(decompose(&table))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub eta: f64,
    pub rounds: usize,
    pub batch_size: usize,
    /// Verifier calls per drawn trace; the first feeds the update, all of
    /// them feed the variance terms.
    #[serde(default = "default_rescores")]
    pub rescores: usize,
    #[serde(default)]
    pub scheme: SamplingScheme,
    pub seed: u64,
}

fn default_rescores() -> usize {
    2
}

/// One round of a flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRow {
    pub round: usize,
    pub capability: f64,
    pub kappa: f64,
    pub intrinsic_var: f64,
    pub generator_var: f64,
    pub batch_mean: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    /// Rounds `0..=rounds`; row `r` describes `θ_r`.
    pub rows: Vec<FlowRow>,
    /// `θ_0 ..= θ_rounds`.
    pub params: Vec<GeneratorParams>,
    /// Round whose batch first proved the staged lemma.
    pub extension_round: Option<usize>,
}

impl FlowTrace {
    pub fn final_params(&self) -> &GeneratorParams {
        self.params.last().expect("at least one round")
    }

    pub fn capabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.capability).collect()
    }

    /// CSV with columns `round,capability,kappa,intrinsic_var,generator_var`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "round",
            "capability",
            "kappa",
            "intrinsic_var",
            "generator_var",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                r.capability.to_string(),
                r.kappa.to_string(),
                r.intrinsic_var.to_string(),
                r.generator_var.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }
}

/// Finite-difference derivative of a curve at point `r`: central inside,
/// one-sided at the ends.
pub fn kappa_of(curve: &[f64], r: usize) -> Result<f64, GvuError> {
    let len = curve.len();
    if r >= len || len < 2 {
        return Err(GvuError::OutOfRange { round: r, len });
    }
    Ok(if r == 0 {
        curve[1] - curve[0]
    } else if r == len - 1 {
        curve[r] - curve[r - 1]
    } else {
        (curve[r + 1] - curve[r - 1]) / 2.0
    })
}

pub fn kappa(trace: &FlowTrace, r: usize) -> Result<f64, GvuError> {
    kappa_of(&trace.capabilities(), r)
}

/// A theorem-proving flow with one library-extension step: once a batch
/// contains an accepted proof of `lemma_task`'s goal, that goal joins the
/// library as a lemma and the battery is rebuilt over the new library.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepAlgebra {
    pub library: Library,
    pub goals: Vec<LibraryGoal>,
    pub weights: Vec<f64>,
    pub model: ResourceModel,
    pub lemma_task: String,
}

impl DeepAlgebra {
    pub fn battery(&self) -> Result<Battery, GvuError> {
        Ok(library_battery(
            &self.library,
            &self.goals,
            self.weights.clone(),
            self.model,
        )?)
    }
}

pub fn run_flow(
    battery: &Battery,
    theta0: &GeneratorParams,
    mode: &VerifierMode,
    cfg: &FlowConfig,
    spec: &AaiSpec,
) -> Result<FlowTrace, GvuError> {
    flow(battery.clone(), theta0, mode, cfg, spec, None)
}

pub fn run_deep_algebra(
    stage: &DeepAlgebra,
    theta0: &GeneratorParams,
    mode: &VerifierMode,
    cfg: &FlowConfig,
    spec: &AaiSpec,
) -> Result<FlowTrace, GvuError> {
    flow(stage.battery()?, theta0, mode, cfg, spec, Some(stage))
}

fn flow(
    mut battery: Battery,
    theta0: &GeneratorParams,
    mode: &VerifierMode,
    cfg: &FlowConfig,
    spec: &AaiSpec,
    stage: Option<&DeepAlgebra>,
) -> Result<FlowTrace, GvuError> {
    if cfg.rounds == 0 {
        return Err(GvuError::TooFew {
            what: "rounds",
            min: 1,
            got: 0,
        });
    }
    if cfg.batch_size == 0 {
        return Err(GvuError::TooFew {
            what: "batch size",
            min: 1,
            got: 0,
        });
    }
    if cfg.rescores < 2 {
        return Err(GvuError::TooFew {
            what: "rescores",
            min: 2,
            got: cfg.rescores,
        });
    }
    if !(cfg.eta.is_finite() && cfg.eta >= 0.0) {
        return Err(GvuError::BadStep(cfg.eta));
    }
    mode.check()?;
    theta0.check(&battery)?;
    let lemma_index = match stage {
        Some(s) => Some(
            battery
                .task_index(&s.lemma_task)
                .ok_or_else(|| GvuError::Extension(format!("no task {:?}", s.lemma_task)))?,
        ),
        None => None,
    };
    let mut theta = theta0.clone();
    let mut extension_round = None;
    let mut rows = Vec::with_capacity(cfg.rounds + 1);
    let mut params = Vec::with_capacity(cfg.rounds + 1);
    for round in 0..=cfg.rounds {
        params.push(theta.clone());
        let capability = battery_capability(&battery, &theta.policy("θ"), spec)?;
        let mut batch = Vec::new();
        let (mut intrinsic, mut generator) = (0.0, 0.0);
        for t in 0..battery.tasks().len() {
            let prefix = [round as u64];
            let traces = keyed_batch(
                &theta,
                &battery,
                t,
                cfg.batch_size,
                cfg.scheme,
                cfg.seed,
                &prefix,
            )?;
            let table = rescore_table(&battery, t, &traces, mode, cfg.rescores, cfg.seed, &prefix)?;
            let w = battery.weights()[t];
            if traces.len() >= 2 {
                let v = decompose(&table);
                intrinsic += w * v.intrinsic;
                generator += w * v.generator;
            }
            batch.extend(traces.into_iter().zip(&table).map(|(trace, row)| Scored {
                task: t,
                trace,
                score: row[0],
            }));
        }
        let batch_mean = batch.iter().map(|s| s.score).sum::<f64>() / batch.len() as f64;
        rows.push(FlowRow {
            round,
            capability,
            kappa: 0.0,
            intrinsic_var: intrinsic,
            generator_var: generator,
            batch_mean,
            seed: cfg.seed,
        });
        if round == cfg.rounds {
            break;
        }
        theta = update(&theta, &battery, &batch, cfg.eta)?;
        if let (Some(s), Some(li), None) = (stage, lemma_index, extension_round) {
            let goal = &s.goals[li].theorem;
            let lib = &s.library;
            if let Some(proof) = batch
                .iter()
                .find(|x| x.task == li && kernel_check(lib, goal, &x.trace))
                .map(|x| x.trace.clone())
            {
                let extended = lib
                    .extend(goal.clone(), proof)
                    .map_err(|e| GvuError::Extension(e.to_string()))?;
                battery = library_battery(&extended, &s.goals, s.weights.clone(), s.model)?;
                extension_round = Some(round);
            }
        }
    }
    let curve: Vec<f64> = rows.iter().map(|r| r.capability).collect();
    for (r, row) in rows.iter_mut().enumerate() {
        row.kappa = kappa_of(&curve, r)?;
    }
    Ok(FlowTrace {
        rows,
        params,
        extension_round,
    })
}
