//! All registered acceptance criteria at seed 1 with default configurations.
//!
//! One line per criterion is written straight to stderr, so it shows even
//! when the harness captures test output.
//! Numerical tolerances live with each experiment and are echoed in the
//! report rows; the wall-clock limits are pinned here.

use pathspace::parallel::default_workers;
use pathspace::{registry, run_named, StatReport};
use std::io::Write;

const SEED: u64 = 1;

/// `(criterion, seconds)` upper bounds on the runtime of single experiments.
const RUNTIME_LIMITS: [(u32, f64); 4] = [(1, 10.0), (2, 10.0), (6, 120.0), (14, 300.0)];

fn emit(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn line(r: &StatReport) -> String {
    let verdict = if r.passed { "PASS" } else { "FAIL" };
    let flagged = r.checks.iter().filter(|c| c.flagged).count();
    let note = if flagged > 0 { format!("  ({flagged} flagged by the seed policy)") } else { String::new() };
    format!("criterion {:>2} {:<22} {verdict}  {:.2}s{note}", r.criterion, r.name, r.wall_clock_seconds)
}

#[test]
fn acceptance_criteria() {
    let workers = default_workers();
    let mut failures = Vec::new();
    for exp in registry() {
        let out = run_named(exp.name, None, SEED, workers).expect("experiment runs");
        let r = &out.report;
        emit(&line(r));
        if !r.passed {
            for c in r.failures() {
                emit(&format!("    failed: {} = {:e} (threshold {:e})", c.name, c.statistic, c.threshold));
            }
            failures.push(format!("criterion {} {}", r.criterion, r.name));
        }
        if let Some(&(_, limit)) = RUNTIME_LIMITS.iter().find(|(k, _)| *k == r.criterion) {
            let fast = r.wall_clock_seconds < limit;
            emit(&format!(
                "criterion {:>2} {:<22} runtime {:.2}s < {limit}s {}",
                r.criterion,
                r.name,
                r.wall_clock_seconds,
                if fast { "PASS" } else { "FAIL" }
            ));
            if !fast {
                failures.push(format!("criterion {} {} runtime", r.criterion, r.name));
            }
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
