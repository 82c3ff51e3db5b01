//! Acceptance suite: runs every verification criterion at its stated
//! tolerance and prints one pass/fail line per criterion. Run with
//! `cargo test -p flatconn --test acceptance -- --nocapture` to see the
//! table. The command-line determinism criterion lives with the CLI crate's
//! tests, next to the binary it exercises.

use flatconn::selftest::run_all;
use std::time::Duration;

#[test]
fn acceptance_criteria() {
    let results = run_all(0);
    assert_eq!(results.len(), 8);

    // Runtime budgets by criterion id; the duality and structure criteria
    // share one computation, so the joint time is charged to both.
    let budget = |id: u32| -> Option<Duration> {
        match id {
            1 => Some(Duration::from_secs(1)),
            2 => Some(Duration::from_secs(30)),
            3 | 4 => Some(Duration::from_secs(60)),
            6 => Some(Duration::from_secs(60)),
            _ => None,
        }
    };

    let mut failed = Vec::new();
    for r in &results {
        let within_budget = budget(r.id).is_none_or(|b| r.elapsed <= b);
        let status = if r.passed && within_budget {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {} ({}): {status} [{:.2}s] — {}",
            r.id,
            r.name,
            r.elapsed.as_secs_f64(),
            r.detail
        );
        if !r.passed {
            failed.push(format!("criterion {} failed: {}", r.id, r.detail));
        }
        if !within_budget {
            failed.push(format!(
                "criterion {} exceeded its runtime budget: {:.2}s",
                r.id,
                r.elapsed.as_secs_f64()
            ));
        }
    }
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}
