//! Homogeneous Lyapunov functions for the closed loops and their numerical
//! certification on the unit sphere.
//!
//! Every function here is homogeneous, so a strict sign on the homogeneous
//! unit sphere extends to the whole state space. The sphere is covered by
//! seeded antithetic samples; a report records the extreme values found, the
//! contraction rate `κ = min(−V̇ / V^{4/5})` and the seed, so any verdict can
//! be reproduced.

mod of;
mod search;
mod sf;

pub use of::{
    certify_of, mu_threshold, observer_loop_field, omega_ratio, search_of_parameters,
    ObserverConstants, OfCertParams,
};
pub use search::{search_parameters, SearchOutcome};
pub use sf::{alpha, certify_sf, SfCertParams, WTerms};

use crate::error::{Error, Result};

/// Sample count (antithetic pairs) used when a caller has no better choice.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Why a certificate was not issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// `k₃ ≤ L`: the integrator cannot dominate the perturbation rate.
    IntegratorTooWeak,
    /// Some sphere sample had `V ≤ 0`.
    NotPositive,
    /// Some sphere sample had `V̇ ≥ 0`.
    NotDecreasing,
}

impl Failure {
    pub fn describe(self) -> &'static str {
        match self {
            Failure::IntegratorTooWeak => "k3 <= L: integrator gain does not exceed the perturbation Lipschitz bound",
            Failure::NotPositive => "V is not positive on the unit sphere",
            Failure::NotDecreasing => "dV/dt is not negative on the unit sphere",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Smallest `V` over the sphere samples.
    pub min_v: f64,
    /// Largest `V̇` over the sphere samples, worst case over `|ρ̇| ≤ L`.
    pub max_vdot: f64,
    /// Sphere minimum of `−V̇ / V^{4/5}`; present only when passed.
    pub kappa: Option<f64>,
    pub passed: bool,
    pub failure: Option<Failure>,
    /// Number of sphere points evaluated (twice the pair count).
    pub samples: usize,
    pub seed: u64,
    /// Measured constants of the observer loop, for output-feedback reports.
    pub observer: Option<ObserverConstants>,
}

impl CertificateReport {
    pub(crate) fn rejected(failure: Failure, seed: u64) -> Self {
        Self {
            min_v: f64::NAN,
            max_vdot: f64::NAN,
            kappa: None,
            passed: false,
            failure: Some(failure),
            samples: 0,
            seed,
            observer: None,
        }
    }

    /// Accumulates `(V, V̇)` pairs into a verdict.
    pub(crate) fn from_samples(values: impl IntoIterator<Item = (f64, f64)>, seed: u64) -> Self {
        let mut min_v = f64::INFINITY;
        let mut max_vdot = f64::NEG_INFINITY;
        let mut kappa = f64::INFINITY;
        let mut samples = 0;
        for (v, vd) in values {
            samples += 1;
            min_v = min_v.min(v);
            max_vdot = max_vdot.max(vd);
            kappa = kappa.min(-vd / libm::pow(v, 0.8));
        }
        let failure = if !(min_v > 0.0) {
            Some(Failure::NotPositive)
        } else if !(max_vdot < 0.0) {
            Some(Failure::NotDecreasing)
        } else {
            None
        };
        Self {
            min_v,
            max_vdot,
            kappa: failure.is_none().then_some(kappa),
            passed: failure.is_none(),
            failure,
            samples,
            seed,
            observer: None,
        }
    }

    /// `T(x₀) ≤ (5/κ) V(x₀)^{1/5}` for a certified report.
    pub fn settling_bound_at(&self, v0: f64) -> Result<f64> {
        settling_bound(v0, self.kappa.unwrap_or(f64::NAN))
    }
}

/// Upper bound `(5/κ)·V₀^{1/5}` on the convergence time of a solution
/// satisfying `V̇ ≤ −κ V^{4/5}`.
pub fn settling_bound(v0: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            requirement: "kappa > 0",
        });
    }
    if !(v0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "V0",
            value: v0,
            requirement: "V0 >= 0",
        });
    }
    Ok(5.0 / kappa * libm::pow(v0, 0.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settling_bound_examples() {
        assert_eq!(settling_bound(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(settling_bound(1.0, 5.0).unwrap(), 1.0);
        assert!(settling_bound(1.0, 0.0).is_err());
        assert!(settling_bound(1.0, -2.0).is_err());
        assert!(settling_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn verdict_from_samples() {
        let r = CertificateReport::from_samples([(1.0, -2.0), (2.0, -1.0)], 7);
        assert!(r.passed);
        assert_eq!(r.samples, 2);
        let k = r.kappa.unwrap();
        assert!((k - 1.0 / libm::pow(2.0, 0.8)).abs() < 1e-15);

        let r = CertificateReport::from_samples([(1.0, -2.0), (0.5, 0.0)], 7);
        assert_eq!(r.failure, Some(Failure::NotDecreasing));
        assert!(r.kappa.is_none());
        assert!(r.settling_bound_at(1.0).is_err());
    }
}
