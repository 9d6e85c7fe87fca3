//! Acceptance suite: runs every reproduction check, prints one line per
//! criterion and fails if any non-observation check fails.

use nonmp_core::reproduce::{run_checks, CheckStatus, CHECKS};

#[test]
fn acceptance_criteria() {
    let outcomes = run_checks(None);
    assert_eq!(outcomes.len(), CHECKS.len());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| o.status == CheckStatus::Fail).map(|o| o.id.as_str()).collect();
    let passed = outcomes.iter().filter(|o| o.status == CheckStatus::Pass).count();
    println!("acceptance: {passed} passed, {} failed, {} observed", failed.len(), outcomes.len() - passed - failed.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn observation_is_never_graded() {
    let obs: Vec<_> = CHECKS.iter().filter(|c| c.tags.contains(&"observation")).collect();
    assert_eq!(obs.len(), 1);
    assert_eq!(obs[0].id, "12");
}
