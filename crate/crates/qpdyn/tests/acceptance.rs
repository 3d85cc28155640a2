//! Acceptance gate: every verification criterion must pass, one line each.

use qpdyn::selftest::{run_all, SelftestConfig};

#[test]
fn acceptance_criteria() {
    let report = run_all(&SelftestConfig::default());
    for r in &report.results {
        println!(
            "[{}] criterion {:2}: {} ({:.1}s) {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.details
        );
    }
    assert!(report.all_passed, "acceptance criteria failed");
}
