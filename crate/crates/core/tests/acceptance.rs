//! One test per acceptance criterion; each prints its PASS/FAIL row.

use gawq::acceptance::criterion;

fn check(id: u8) {
    let r = criterion(id);
    println!("{}", r.line());
    assert!(r.pass, "{}", r.line());
}

#[test]
fn criterion_01_scattering_oracle_equivalence() {
    check(1);
}

#[test]
fn criterion_02_unitarity_at_zero_gain() {
    check(2);
}

#[test]
fn criterion_03_decoupling_points() {
    check(3);
}

#[test]
fn criterion_04_spectral_singularity() {
    check(4);
}

#[test]
fn criterion_05_pole_spectrum() {
    check(5);
}

#[test]
fn criterion_06_singularity_pole_consistency() {
    check(6);
}

#[test]
fn criterion_07_loss_run_dynamics() {
    check(7);
}

#[test]
fn criterion_08_free_propagation_analytics() {
    check(8);
}

#[test]
fn criterion_09_gain_run_dynamics() {
    check(9);
}

#[test]
fn criterion_10_long_time_closure() {
    check(10);
}

#[test]
fn criterion_11_property_suite() {
    check(11);
}
