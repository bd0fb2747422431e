//! Library extension: the ordering is asserted only where the dominance
//! and cost hypotheses hold, and the cost hypothesis is not vacuous.

use batlab_core::battery::{battery_capability, monotonicity_audit, AaiSpec, BatteryError};
use batlab_core::kernel::{library_battery, Library, LibraryGoal, ResourceModel, Theorem};
use batlab_core::{AgentPolicy, TaskPolicy, Trace};

fn libraries() -> (Library, Library) {
    let small = Library::base("L1");
    let sx = Theorem::parse("sx", "(x+s(0))", "s(x)", &["x"]).unwrap();
    let large = small
        .extend(
            sx,
            Trace::from("STEP A2 LR root x:=x,y:=0 ; STEP A1 LR 0 x:=x ;"),
        )
        .unwrap()
        .with_id("L2");
    (small, large)
}

fn goals() -> Vec<LibraryGoal> {
    vec![LibraryGoal {
        theorem: Theorem::parse("two", "(s(0)+s(0))", "s(s(0))", &[]).unwrap(),
        candidates: vec![
            Trace::from("STEP A2 LR root x:=s(0),y:=0 ; STEP A1 LR 0 x:=s(0) ;"),
            Trace::from("STEP sx LR root x:=s(0) ;"),
            Trace::from("HALT"),
        ],
    }]
}

fn lemma_user() -> AgentPolicy {
    AgentPolicy::new("lemma_user", vec![TaskPolicy::Deterministic(1)])
}

#[test]
fn extension_helps_the_lemma_user() {
    let (l1, l2) = libraries();
    let spec = AaiSpec::new(vec![1.0], 0.05, 4.0).unwrap();
    let policies = vec![
        lemma_user(),
        AgentPolicy::new("long", vec![TaskPolicy::Deterministic(0)]),
        AgentPolicy::new("uniform", vec![TaskPolicy::Uniform]),
    ];
    let report = monotonicity_audit(
        &l1,
        &l2,
        &goals(),
        vec![1.0],
        ResourceModel::ScriptSteps,
        &policies,
        &spec,
    )
    .unwrap();
    assert!(report.passed());
    assert!(report
        .rows
        .iter()
        .all(|r| r.hypotheses_met && r.ordering_holds()));
    assert!(report.rows[0].strict());
    assert!(!report.rows[1].strict());
}

#[test]
fn cost_growth_breaks_the_hypothesis_and_the_ordering() {
    // Accepted scripts are charged their steps, so the larger library makes
    // the lemma user pay for a proof it now completes. A steep cost weight
    // turns the gain into a loss; the audit must not assert the ordering.
    let (l1, l2) = libraries();
    let spec = AaiSpec::new(vec![1.0], 2.0, 4.0).unwrap();
    let policies = vec![lemma_user()];
    let model = ResourceModel::AcceptedSteps;
    let report =
        monotonicity_audit(&l1, &l2, &goals(), vec![1.0], model, &policies, &spec).unwrap();
    let row = &report.rows[0];
    assert!(row.dominance.iter().all(|&d| d));
    assert!(row.cost_large > row.cost_small);
    assert!(!row.hypotheses_met);
    assert!(!row.ordering_holds(), "{row:?}");
    assert!(report.passed());

    let b1 = library_battery(&l1, &goals(), vec![1.0], model).unwrap();
    let b2 = library_battery(&l2, &goals(), vec![1.0], model).unwrap();
    let (f1, f2) = (
        battery_capability(&b1, &policies[0], &spec).unwrap(),
        battery_capability(&b2, &policies[0], &spec).unwrap(),
    );
    assert_eq!(f1, 0.0);
    assert!((f2 - (1.0 - 2.0)).abs() < 1e-12);
}

#[test]
fn reversed_libraries_are_rejected() {
    let (l1, l2) = libraries();
    let spec = AaiSpec::new(vec![1.0], 0.0, 1.0).unwrap();
    let err = monotonicity_audit(
        &l2,
        &l1,
        &goals(),
        vec![1.0],
        ResourceModel::ScriptSteps,
        &[lemma_user()],
        &spec,
    );
    assert!(matches!(err, Err(BatteryError::Incompatible(_))));
}
