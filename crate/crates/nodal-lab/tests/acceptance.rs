//! The full acceptance gate: runs every suite criterion, prints one line per
//! check, and fails if any check fails.

use nodal_lab::report;

#[test]
fn acceptance_suite() {
    let results = report::run_all();
    let mut failed = Vec::new();
    for r in &results {
        println!(
            "criterion {:2} {:<35} {} ({:.1}s) {}",
            r.id,
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.seconds,
            r.detail
        );
        if !r.passed {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
