//! Acceptance criteria for the two-process STIRAP rotation.
//!
//! One test per criterion; each prints a single PASS/FAIL line with the
//! measured values. Run with `cargo test -p stirap-core --test acceptance
//! -- --nocapture --test-threads 1` to see the table in order.

use stirap_core::verification::{self, CriterionReport, ORACLE_TUPLES};

fn check(report: CriterionReport) {
    println!("{}", report.line());
    assert!(report.passed, "criterion {} failed: {}", report.id, report.detail);
}

#[test]
fn criterion_01_fig2_rotation() {
    check(verification::fig2_rotation());
}

#[test]
fn criterion_02_fig2_return() {
    check(verification::fig2_return());
}

#[test]
fn criterion_03_excited_state_suppression() {
    check(verification::excited_state_suppression());
}

#[test]
fn criterion_04_intermediate_state() {
    check(verification::intermediate_state());
}

#[test]
fn criterion_05_oracle_equivalence() {
    check(verification::oracle_equivalence(ORACLE_TUPLES));
}

#[test]
fn criterion_06_unitary_map_extraction() {
    check(verification::unitary_map_extraction());
}

#[test]
fn criterion_07_robustness() {
    check(verification::robustness());
}

#[test]
fn criterion_08_chi_sensitivity() {
    check(verification::chi_sensitivity());
}

#[test]
fn criterion_09_numerics() {
    check(verification::numerics());
}

#[test]
fn criterion_10_adiabatic_convergence() {
    check(verification::adiabatic_convergence_check());
}
