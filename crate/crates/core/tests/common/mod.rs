//! Closed loops in error coordinates, assembled from the public control laws
//! with `ρ ≡ 0`.
#![allow(dead_code)]

use dic_core::controllers::{ControlLaw, ControllerState, GainSet};
use dic_core::homogeneous::spow;

/// `(x₁, x₂, x₃)` with `x₃ = z + ρ`.
pub fn sf_error_field(g: &GainSet, s: &[f64]) -> Vec<f64> {
    let law = ControlLaw::state_feedback(*g);
    let st = ControllerState::with_integrator(s[2]);
    let u = law.control([s[0], s[1]], &st);
    let rate = law.state_rate([s[0], s[1]], &st);
    vec![s[1], u, rate.z]
}

/// `(x₁, x₂, e₁, e₂, x₃)` with `e = x̂ − x`.
pub fn of_error_field(g: &GainSet, s: &[f64]) -> Vec<f64> {
    let law = ControlLaw::output_feedback(*g).unwrap();
    let st = ControllerState::with_observer(s[4], [s[0] + s[2], s[1] + s[3]]);
    let u = law.control([s[0], s[1]], &st);
    let rate = law.state_rate([s[0], s[1]], &st);
    let xhat_rate = rate.xhat.unwrap();
    vec![s[1], u, xhat_rate[0] - s[1], xhat_rate[1] - u, rate.z]
}

pub fn sf_switching(k4: f64) -> impl Fn(&[f64]) -> f64 {
    move |s: &[f64]| s[0] + k4 * spow(s[1], 1.5)
}

pub fn of_switching(k4: f64) -> impl Fn(&[f64]) -> f64 {
    move |s: &[f64]| s[0] + k4 * spow(s[1] + s[3], 1.5)
}

pub fn paper_gains() -> GainSet {
    GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap()
}

/// Distance in units in the last place.
pub fn ulps(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    if a.signum() != b.signum() {
        return u64::MAX;
    }
    (a.abs().to_bits() as i64 - b.abs().to_bits() as i64).unsigned_abs()
}
