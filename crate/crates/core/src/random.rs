//! Seeded random instances for sweeps, property tests and benches.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::agent::{Agent, AgentClass, AgentPolicy, TaskPolicy};
use crate::battery::{Battery, CoupledAtom, EvalPoint, EvaluationLaw, Formality, Task};
use crate::rng::Rng;
use crate::scorer::Scorer;
use crate::trace::{FiniteSupportFn, Trace};

/// Random probability vector of length `n` with at least one positive
/// entry. Entries are exact multiples of `1/z` only up to rounding; the
/// last one absorbs the remainder so the sum is 1 within `1e-15`.
pub fn probabilities(n: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let z: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / z).collect();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = (1.0 - head).max(0.0);
    p
}

/// An agent with `1..=max_support` atoms drawn from `pool`.
pub fn agent(pool: &[Trace], max_support: usize, rng: &mut Rng) -> Agent {
    let k = rng.gen_range(1..=max_support.min(pool.len()));
    let atoms: Vec<Trace> = pool.choose_multiple(rng, k).cloned().collect();
    let p = probabilities(k, rng);
    Agent::new(atoms.into_iter().zip(p)).expect("normalized by construction")
}

/// A class of `1..=max_agents` random agents, point masses included with
/// probability one half each.
pub fn class(pool: &[Trace], max_agents: usize, max_support: usize, rng: &mut Rng) -> AgentClass {
    let n = rng.gen_range(1..=max_agents);
    let agents = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Agent::point_mass(pool[rng.gen_range(0..pool.len())].clone())
            } else {
                agent(pool, max_support, rng)
            }
        })
        .collect();
    AgentClass::new("random", agents).expect("nonempty")
}

/// A table with each pool trace kept with probability `density`.
pub fn table(pool: &[Trace], density: f64, rng: &mut Rng) -> FiniteSupportFn {
    let mut entries: Vec<(Trace, f64)> = Vec::new();
    for t in pool {
        if rng.gen_bool(density) {
            entries.push((t.clone(), rng.gen::<f64>()));
        }
    }
    FiniteSupportFn::new(entries).expect("values in [0, 1)")
}

/// An evaluation point with scores on a `1/20` grid and small resources.
pub fn point(tasks: usize, dims: usize, rng: &mut Rng) -> EvalPoint {
    EvalPoint::new(
        (0..tasks)
            .map(|_| rng.gen_range(0..=20) as f64 / 20.0)
            .collect(),
        (0..dims)
            .map(|_| rng.gen_range(0..=10) as f64 / 10.0)
            .collect(),
    )
}

/// A law on `1..=max_atoms` random points.
pub fn law(tasks: usize, dims: usize, max_atoms: usize, rng: &mut Rng) -> EvaluationLaw {
    let n = rng.gen_range(1..=max_atoms);
    let p = probabilities(n, rng);
    EvaluationLaw::new((0..n).map(|_| point(tasks, dims, rng)).zip(p)).expect("valid law")
}

/// A finite coupling of `(Z, R)` with a perturbed `(Z', R)`.
pub fn coupling(tasks: usize, dims: usize, atoms: usize, rng: &mut Rng) -> Vec<CoupledAtom> {
    let p = probabilities(atoms, rng);
    p.into_iter()
        .map(|p| {
            let base = point(tasks, dims, rng);
            let z_prime = base
                .q
                .iter()
                .map(|&z| {
                    if rng.gen_bool(0.5) {
                        z
                    } else {
                        (z + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0)
                    }
                })
                .collect();
            CoupledAtom {
                z: base.q,
                z_prime,
                r: base.r,
                p,
            }
        })
        .collect()
}

/// A battery of table-scored tasks with random candidates and resources.
pub fn battery(
    pool: &[Trace],
    tasks: usize,
    candidates: usize,
    dims: usize,
    rng: &mut Rng,
) -> Battery {
    let ts = (0..tasks)
        .map(|t| {
            let cands: Vec<Trace> = pool
                .choose_multiple(rng, candidates.min(pool.len()))
                .cloned()
                .collect();
            let scorer = Scorer::Table(table(&cands, 0.8, rng));
            let res = cands
                .iter()
                .map(|_| {
                    (0..dims)
                        .map(|_| rng.gen_range(0..=4) as f64 / 4.0)
                        .collect()
                })
                .collect();
            Task::new(format!("t{t}"), scorer, cands, res, Formality::Informal).expect("nonempty")
        })
        .collect();
    Battery::new("random", ts, probabilities(tasks, rng), dims).expect("valid battery")
}

/// Random softmax and mixed policies over `battery`.
pub fn policies(battery: &Battery, n: usize, rng: &mut Rng) -> Vec<AgentPolicy> {
    (0..n)
        .map(|i| {
            let tasks = battery
                .tasks()
                .iter()
                .map(|t| {
                    let k = t.candidates().len();
                    match rng.gen_range(0..3) {
                        0 => TaskPolicy::Deterministic(rng.gen_range(0..k)),
                        1 => TaskPolicy::Logits((0..k).map(|_| rng.gen_range(-3.0..3.0)).collect()),
                        _ => TaskPolicy::Probabilities(probabilities(k, rng)),
                    }
                })
                .collect();
            AgentPolicy::new(format!("p{i}"), tasks)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::trace::{enumerate_traces, Alphabet};

    #[test]
    fn generators_produce_valid_objects() {
        let pool = enumerate_traces(&Alphabet::new(['a', 'b']).unwrap(), 3).unwrap();
        let mut r = rng::keyed(5, &[]);
        for _ in 0..50 {
            let p = probabilities(rng::keyed(r.gen(), &[]).gen_range(1..6), &mut r);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            class(&pool, 4, 5, &mut r);
            law(2, 1, 5, &mut r);
            let b = battery(&pool, 3, 4, 1, &mut r);
            for pol in policies(&b, 3, &mut r) {
                pol.distributions(&b).unwrap();
            }
        }
    }
}
