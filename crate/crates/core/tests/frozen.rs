//! Reference values computed once with an independent 50-digit implementation and frozen here.
#![allow(clippy::excessive_precision)]

use ellq_core::bracket::{bracket, bracket_star};
use ellq_core::ope::{c_n, kappa};
use ellq_core::qseries::curly;
use ellq_core::rmatrix::g_n;
use ellq_core::{make_params, EllipticParams, Star, Truncation, C64};

fn params(c: f64, n: usize) -> EllipticParams {
    make_params(C64::new(0.5, 0.0), 7.3, c, n).unwrap()
}

fn close(got: C64, want: C64, tol: f64) {
    let err = (got - want).norm() / want.norm();
    assert!(err < tol, "got {got}, want {want}, rel err {err:e}");
}

#[test]
fn bracket_values() {
    let t = Truncation::default();
    let v = C64::new(0.37, 0.11);
    close(bracket(v, &params(0.0, 2), &t).unwrap(), C64::new(0.51215549112548292, 0.15156959810094289), 1e-14);
    close(bracket_star(v, &params(1.0, 2), &t).unwrap(), C64::new(0.51136624454205147, 0.15064302952414895), 1e-14);
}

#[test]
fn curly_value() {
    let got = curly(C64::new(0.3, 0.0), &params(0.0, 2), Star::Plain, &Truncation::default()).unwrap();
    close(got, C64::new(0.6860076291479709, 0.0), 1e-14);
}

#[test]
fn constants_values() {
    let t = Truncation::default();
    close(kappa(&params(1.0, 2), &t).unwrap(), C64::new(1.0000906371732185, 0.0), 1e-14);
    close(c_n(&params(1.0, 3), &t).unwrap(), C64::new(1.000001078832516, 0.0), 1e-14);
    close(g_n(&params(0.0, 2), &t).unwrap(), C64::new(0.78997047466993237, 0.0), 1e-14);
    close(g_n(&params(0.0, 3), &t).unwrap(), C64::new(0.75906977552513058, 0.0), 1e-14);
}
