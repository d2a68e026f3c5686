//! Acceptance suite: runs every criterion of the builtin verification
//! battery and prints one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use vrgrad::harness::acceptance::run_acceptance_suite;

#[test]
fn all_acceptance_criteria_pass() {
    let results = run_acceptance_suite();
    assert_eq!(results.len(), 14);
    let mut failures = Vec::new();
    for c in &results {
        println!(
            "criterion {:>2} {:<42} {}  [{}]",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
        if !c.passed {
            failures.push(format!("criterion {} ({}): {}", c.id, c.name, c.detail));
        }
    }
    assert!(
        failures.is_empty(),
        "failed criteria:\n{}",
        failures.join("\n")
    );
}
