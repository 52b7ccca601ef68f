//! End-to-end acceptance gate: one pass/fail line per criterion.
//! Tolerances are pinned inside the library's verification module; this
//! target only orchestrates and reports.

use wavefront_kdv::verify::{run_all, VerifyOptions};

#[test]
fn acceptance_suite() {
    let results = run_all(&VerifyOptions::default());
    let mut all_pass = true;
    for r in &results {
        println!("{}", r.line());
        all_pass &= r.passed;
    }
    assert!(all_pass, "at least one acceptance criterion failed");
    assert_eq!(results.len(), 11);
}
