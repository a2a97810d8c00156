//! Acceptance criteria, one test each. Every test prints a single
//! `[PASS]`/`[FAIL]` line before asserting.

use lclt_core::verify::{self, CheckOutcome, Level};

fn report(criterion: u32, outcome: CheckOutcome) {
    println!("criterion {criterion:>2} {}", outcome.line());
    assert!(outcome.passed, "criterion {criterion} failed: {}", outcome.detail);
}

#[test]
fn criterion_01_hermite_identities() {
    report(1, verify::check_hermite_identities(Level::Full));
}

#[test]
fn criterion_02_stein_solution_bounds() {
    report(2, verify::check_stein_bounds(Level::Full));
}

#[test]
fn criterion_03_stein_weak_residual() {
    report(3, verify::check_stein_residual(Level::Full));
}

#[test]
fn criterion_04_pairing_identity() {
    report(4, verify::check_pairing_identity(Level::Full));
}

#[test]
fn criterion_05_norm_machinery() {
    report(5, verify::check_norm_machinery(Level::Full));
}

#[test]
fn criterion_06_fgn_simulator() {
    report(6, verify::check_fgn_simulator(Level::Full));
}

#[test]
fn criterion_07_cumulant_cross_validation() {
    report(7, verify::check_cumulant_cross_validation(Level::Full));
}

#[test]
fn criterion_08_exponent_table() {
    report(8, verify::check_exponent_table(Level::Full));
}

#[test]
fn criterion_09_density_sandwich() {
    report(9, verify::check_density_sandwich(Level::Full));
}

#[test]
fn criterion_10_edgeworth_improvement() {
    report(10, verify::check_edgeworth(Level::Full));
}

#[test]
fn criterion_11_limit_shape() {
    report(11, verify::check_limit_shape(Level::Full));
}

/// Both suite levels run every check to completion within budget. Check
/// verdicts themselves are covered by criteria 1-11.
#[test]
fn criterion_12_suite_runtime() {
    let mut lines = Vec::new();
    let mut passed = true;
    for level in [Level::Fast, Level::Full] {
        let r = verify::verify_suite(level);
        let completed = r.checks.iter().all(|c| !c.detail.starts_with("error:"));
        let in_budget = r.elapsed_secs < level.budget_secs();
        passed &= completed && in_budget;
        lines.push(format!(
            "{level:?}: {} checks, {} passed, completed {completed}, {:.1}s of {:.0}s",
            r.checks.len(),
            r.checks.iter().filter(|c| c.passed).count(),
            r.elapsed_secs,
            level.budget_secs()
        ));
    }
    report(
        12,
        CheckOutcome { name: "verify suite runtime".into(), passed, detail: lines.join("; "), elapsed_secs: 0.0 },
    );
}

#[test]
fn mutation_is_detected() {
    let outcome = verify::check_ladder_mutation(Level::Full);
    println!("anti-test    {}", outcome.line());
    assert!(outcome.passed, "{}", outcome.detail);
}
