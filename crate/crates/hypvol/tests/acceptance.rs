//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured values and the pinned tolerances.
//!
//! The lines go straight to the process stderr so that they show up even
//! though the test harness captures `print!` output.

use std::io::Write;

use hypvol::checks::{self, DEFAULT_SEED};

fn criterion(id: u8) {
    let report = checks::run(id, DEFAULT_SEED).expect("known criterion");
    let _ = writeln!(std::io::stderr(), "{}", report.line());
    assert!(report.passed(), "{}", report.line());
}

#[test]
fn criterion_1_curvature() {
    criterion(1);
}

#[test]
fn criterion_2_isometry() {
    criterion(2);
}

#[test]
fn criterion_3_hamilton_jacobi() {
    criterion(3);
}

#[test]
fn criterion_4_fitter() {
    criterion(4);
}

#[test]
fn criterion_5_variation() {
    criterion(5);
}

#[test]
fn criterion_6_uniformization() {
    criterion(6);
}

#[test]
fn criterion_7_degeneration() {
    criterion(7);
}

#[test]
fn criterion_8_schwarzian() {
    criterion(8);
}
