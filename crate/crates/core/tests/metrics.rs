//! Property tests of the evaluation-space metrics on seeded random laws.

use batlab_core::battery::{
    aai_capability, bl_distance, coupling_bound_check, evaluate, lipschitz_check, total_variation,
    wasserstein1, AaiSpec, EvalMode, EvalPoint, EvaluationLaw,
};
use batlab_core::trace::{enumerate_traces, Alphabet};
use batlab_core::{random, rng};
use proptest::prelude::*;

fn laws(seed: u64, n: usize) -> Vec<EvaluationLaw> {
    let mut r = rng::keyed(seed, &[]);
    (0..n).map(|_| random::law(2, 1, 4, &mut r)).collect()
}

fn d(a: &EvaluationLaw, b: &EvaluationLaw) -> f64 {
    bl_distance(a, b).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bl_is_a_bounded_pseudometric(seed in any::<u64>()) {
        let l = laws(seed, 3);
        let (x, y, z) = (&l[0], &l[1], &l[2]);
        prop_assert!(d(x, x).abs() <= 1e-9);
        prop_assert!((d(x, y) - d(y, x)).abs() <= 1e-9);
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-9);
        prop_assert!(d(x, y) >= -1e-12 && d(x, y) <= 2.0 + 1e-9);
    }

    #[test]
    fn bl_is_dominated_by_tv_and_w1(seed in any::<u64>()) {
        let l = laws(seed, 2);
        let v = d(&l[0], &l[1]);
        prop_assert!(v <= 2.0 * total_variation(&l[0], &l[1]) + 1e-9);
        prop_assert!(v <= wasserstein1(&l[0], &l[1]).unwrap() + 1e-9);
    }

    #[test]
    fn dirac_pairs_are_capped_ground_distance(seed in any::<u64>()) {
        let mut r = rng::keyed(seed, &[]);
        let (a, b) = (random::point(3, 2, &mut r), random::point(3, 2, &mut r));
        let g = batlab_core::battery::ground_distance(&a, &b);
        let v = d(&EvaluationLaw::dirac(a), &EvaluationLaw::dirac(b));
        prop_assert!((v - g.min(2.0)).abs() <= 1e-9, "{v} vs {g}");
    }

    #[test]
    fn coupling_bound_holds(seed in any::<u64>(), atoms in 1usize..6) {
        let c = random::coupling(2, 1, atoms, &mut rng::keyed(seed, &[]));
        let check = coupling_bound_check(&c).unwrap();
        prop_assert!(check.pass, "{check:?}");
    }

    #[test]
    fn capability_is_lipschitz_in_bl(seed in any::<u64>(), lambda in 0.0f64..2.0, cap in 0.1f64..3.0) {
        let l = laws(seed, 2);
        let spec = AaiSpec::new(vec![0.7, 0.3], lambda, cap).unwrap();
        let check = lipschitz_check(&spec, &l[0], &l[1]).unwrap();
        prop_assert!(check.lhs <= check.rhs + 1e-9, "{check:?}");
    }
}

#[test]
fn sampled_law_approaches_exact_law() {
    let pool = enumerate_traces(&Alphabet::new(['a', 'b']).unwrap(), 2).unwrap();
    let mut r = rng::keyed(8, &[]);
    let b = random::battery(&pool, 2, 3, 1, &mut r);
    let spec = AaiSpec::success_only(&b).unwrap();
    for p in random::policies(&b, 4, &mut r) {
        let exact = evaluate(&b, &p, EvalMode::Exact).unwrap();
        let sampled = evaluate(
            &b,
            &p,
            EvalMode::Sampled {
                episodes: 20_000,
                seed: 3,
            },
        )
        .unwrap();
        let mass: f64 = sampled.atoms().iter().map(|(_, m)| m).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(total_variation(&exact, &sampled) < 0.03);
        let gap = aai_capability(&spec, &exact).unwrap() - aai_capability(&spec, &sampled).unwrap();
        assert!(gap.abs() < 0.02, "{gap}");
    }
}

#[test]
fn identical_points_merge() {
    let p = EvalPoint::new(vec![0.5], vec![]);
    let law = EvaluationLaw::new([(p.clone(), 0.25), (p.clone(), 0.75)]).unwrap();
    assert_eq!(law.atoms().len(), 1);
    assert_eq!(law.mass_at(&p), 1.0);
    assert!(EvaluationLaw::new([(p, 0.5)]).is_err());
}
