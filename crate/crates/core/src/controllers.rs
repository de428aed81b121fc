//! Discontinuous integral control laws and the Twisting baseline.
//!
//! State feedback:
//!
//! ```text
//! u = −k₁⌈x₁⌋^{1/3} − k₂⌈x₂⌋^{1/2} + z
//! ż = −k₃⌈x₁ + k₄⌈x₂⌋^{3/2}⌋⁰
//! ```
//!
//! The output-feedback law replaces `x₂` by the estimate `x̂₂` of the observer
//! in [`observer_rate`], which is driven by the measured position only.

use crate::error::{check, Error, Result};
use crate::homogeneous::{sgn, spow, ONE_THIRD, TWO_THIRDS};

/// Finite-time observer gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverGains {
    l1: f64,
    l2: f64,
}

impl ObserverGains {
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        check(l1 > 0.0 && l1.is_finite(), "l1", l1, "l1 > 0")?;
        check(l2 > 0.0 && l2.is_finite(), "l2", l2, "l2 > 0")?;
        Ok(Self { l1, l2 })
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }
}

/// Controller gains `k₁, k₂, k₃ > 0`, `k₄` of any sign, plus optional
/// observer gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
    observer: Option<ObserverGains>,
}

impl GainSet {
    pub fn new(k1: f64, k2: f64, k3: f64, k4: f64) -> Result<Self> {
        check(k1 > 0.0 && k1.is_finite(), "k1", k1, "k1 > 0")?;
        check(k2 > 0.0 && k2.is_finite(), "k2", k2, "k2 > 0")?;
        check(k3 > 0.0 && k3.is_finite(), "k3", k3, "k3 > 0")?;
        check(k4.is_finite(), "k4", k4, "finite")?;
        Ok(Self {
            k1,
            k2,
            k3,
            k4,
            observer: None,
        })
    }

    pub fn with_observer(mut self, l1: f64, l2: f64) -> Result<Self> {
        self.observer = Some(ObserverGains::new(l1, l2)?);
        Ok(self)
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn k3(&self) -> f64 {
        self.k3
    }

    pub fn k4(&self) -> f64 {
        self.k4
    }

    pub fn observer(&self) -> Option<&ObserverGains> {
        self.observer.as_ref()
    }

    fn require_observer(&self) -> Result<&ObserverGains> {
        self.observer.as_ref().ok_or(Error::MissingObserverGains)
    }
}

/// `u = −k₁⌈x₁⌋^{1/3} − k₂⌈x₂⌋^{1/2} + z`, where `x2_used` is either the
/// measured velocity or its estimate.
#[inline]
pub fn dic_control(x1: f64, x2_used: f64, z: f64, g: &GainSet) -> f64 {
    -g.k1 * spow(x1, ONE_THIRD) - g.k2 * spow(x2_used, 0.5) + z
}

/// `ż = −k₃ sgn(x₁ + k₄⌈x₂⌋^{3/2})` with `sgn(0) = 0`.
#[inline]
pub fn dic_integrator_rate(x1: f64, x2_used: f64, g: &GainSet) -> f64 {
    -g.k3 * sgn(integrator_input(x1, x2_used, g.k4))
}

/// The switching output `x₁ + k₄⌈x₂⌋^{3/2}`.
#[inline]
pub fn integrator_input(x1: f64, x2: f64, k4: f64) -> f64 {
    if k4 == 0.0 {
        x1
    } else {
        x1 + k4 * spow(x2, 1.5)
    }
}

/// Observer right-hand side `(x̂̇₁, x̂̇₂)` given the measured position `x1`.
///
/// The estimate is driven by the nominal state feedback, without the
/// integrator state.
pub fn observer_rate(xhat: [f64; 2], x1: f64, g: &GainSet) -> Result<[f64; 2]> {
    let obs = g.require_observer()?;
    Ok(observer_rate_with(xhat, x1, g, obs))
}

#[inline]
fn observer_rate_with(xhat: [f64; 2], x1: f64, g: &GainSet, obs: &ObserverGains) -> [f64; 2] {
    let e1 = xhat[0] - x1;
    [
        -obs.l1 * spow(e1, TWO_THIRDS) + xhat[1],
        -obs.l2 * spow(e1, ONE_THIRD) - g.k1 * spow(x1, ONE_THIRD) - g.k2 * spow(xhat[1], 0.5),
    ]
}

/// `u = −k₁ sgn(x₁) − k₂ sgn(x₂)`.
#[inline]
pub fn twisting_control(x1: f64, x2: f64, k1: f64, k2: f64) -> f64 {
    -k1 * sgn(x1) - k2 * sgn(x2)
}

/// Gains `(λ^{2/3}k₁, λ^{1/2}k₂, λk₃, λ^{-3/2}k₄)`, and with `with_observer`
/// also `(λ^{1/3}l₁, λ^{2/3}l₂)`.
///
/// If the original gains stabilise the loop for perturbations with Lipschitz
/// constant `L`, the scaled gains do so for `λL`: the closed loop with the
/// scaled gains maps onto the original one under `x ↦ λx`.
pub fn scale_gains(g: &GainSet, lambda: f64, with_observer: bool) -> Result<GainSet> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NonPositiveScale(lambda));
    }
    let mut scaled = GainSet::new(
        libm::pow(lambda, TWO_THIRDS) * g.k1,
        libm::sqrt(lambda) * g.k2,
        lambda * g.k3,
        g.k4 / (lambda * libm::sqrt(lambda)),
    )?;
    scaled.observer = match (g.observer, with_observer) {
        (Some(o), true) => Some(ObserverGains::new(
            libm::cbrt(lambda) * o.l1,
            libm::pow(lambda, TWO_THIRDS) * o.l2,
        )?),
        (o, _) => o,
    };
    Ok(scaled)
}

/// Dynamic controller state: integrator `z` and, for output feedback, the
/// observer estimate `(x̂₁, x̂₂)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub z: f64,
    pub xhat: Option<[f64; 2]>,
}

impl ControllerState {
    pub fn with_integrator(z: f64) -> Self {
        Self { z, xhat: None }
    }

    pub fn with_observer(z: f64, xhat: [f64; 2]) -> Self {
        Self {
            z,
            xhat: Some(xhat),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.xhat.is_none_or(|x| x[0].is_finite() && x[1].is_finite())
    }
}

/// Time derivative of a [`ControllerState`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerRate {
    pub z: f64,
    pub xhat: Option<[f64; 2]>,
}

impl ControllerState {
    /// `self + h·rate`.
    pub fn advanced(&self, rate: &ControllerRate, h: f64) -> Self {
        Self {
            z: self.z + h * rate.z,
            xhat: match (self.xhat, rate.xhat) {
                (Some(x), Some(r)) => Some([x[0] + h * r[0], x[1] + h * r[1]]),
                (x, _) => x,
            },
        }
    }
}

/// The three closed-loop laws simulated by this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    /// Discontinuous integral controller with measured velocity.
    StateFeedback(GainSet),
    /// Discontinuous integral controller with the finite-time observer; the
    /// gain set must carry observer gains.
    OutputFeedback(GainSet),
    Twisting { k1: f64, k2: f64 },
}

impl ControlLaw {
    pub fn state_feedback(gains: GainSet) -> Self {
        ControlLaw::StateFeedback(gains)
    }

    pub fn output_feedback(gains: GainSet) -> Result<Self> {
        gains.require_observer()?;
        Ok(ControlLaw::OutputFeedback(gains))
    }

    pub fn twisting(k1: f64, k2: f64) -> Result<Self> {
        check(k1 > 0.0 && k1.is_finite(), "k1", k1, "k1 > 0")?;
        check(k2 > 0.0 && k2.is_finite(), "k2", k2, "k2 > 0")?;
        Ok(ControlLaw::Twisting { k1, k2 })
    }

    pub fn uses_observer(&self) -> bool {
        matches!(self, ControlLaw::OutputFeedback(_))
    }

    /// Checks that `state` carries exactly the dynamic states this law needs.
    pub fn check_state(&self, state: &ControllerState) -> Result<()> {
        match (self, state.xhat) {
            (ControlLaw::OutputFeedback(g), None) => {
                g.require_observer()?;
                Err(Error::InvalidParameter {
                    name: "observer state",
                    value: f64::NAN,
                    requirement: "initial estimate for output feedback",
                })
            }
            (ControlLaw::OutputFeedback(g), Some(_)) => g.require_observer().map(|_| ()),
            _ => Ok(()),
        }
    }

    fn velocity_used(&self, x: [f64; 2], state: &ControllerState) -> f64 {
        match (self, state.xhat) {
            (ControlLaw::OutputFeedback(_), Some(xhat)) => xhat[1],
            _ => x[1],
        }
    }

    /// Control input from the plant state and the controller state. The
    /// output-feedback law reads only `x[0]` from the plant.
    pub fn control(&self, x: [f64; 2], state: &ControllerState) -> f64 {
        match self {
            ControlLaw::StateFeedback(g) | ControlLaw::OutputFeedback(g) => {
                dic_control(x[0], self.velocity_used(x, state), state.z, g)
            }
            ControlLaw::Twisting { k1, k2 } => twisting_control(x[0], x[1], *k1, *k2),
        }
    }

    pub fn state_rate(&self, x: [f64; 2], state: &ControllerState) -> ControllerRate {
        match self {
            ControlLaw::StateFeedback(g) => ControllerRate {
                z: dic_integrator_rate(x[0], x[1], g),
                xhat: None,
            },
            ControlLaw::OutputFeedback(g) => {
                let xhat_rate = match (state.xhat, g.observer.as_ref()) {
                    (Some(xhat), Some(obs)) => Some(observer_rate_with(xhat, x[0], g, obs)),
                    _ => None,
                };
                ControllerRate {
                    z: dic_integrator_rate(x[0], self.velocity_used(x, state), g),
                    xhat: xhat_rate,
                }
            }
            ControlLaw::Twisting { .. } => ControllerRate::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_gains() -> GainSet {
        GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap()
    }

    #[test]
    fn dic_control_examples() {
        let g = paper_gains();
        assert_eq!(dic_control(0.0, 0.0, 0.0, &g), 0.0);
        assert_eq!(dic_control(1.0, 0.0, 0.0, &g), -2.0);
        assert_eq!(dic_control(-8.0, 4.0, 1.0, &g), -5.0);
    }

    #[test]
    fn integrator_rate_examples() {
        let g = paper_gains();
        assert_eq!(dic_integrator_rate(2.0, 0.0, &g), -0.5);
        assert_eq!(dic_integrator_rate(0.0, 3.0, &g), 0.0);
        let g = GainSet::new(2.0, 5.0, 0.5, 1.0).unwrap();
        assert_eq!(dic_integrator_rate(-1.0, 1.0, &g), 0.0);
    }

    #[test]
    fn integrator_rate_with_zero_k4_ignores_velocity() {
        let g = paper_gains();
        for x2 in [-3.0, 0.0, 0.1, 7.0] {
            assert_eq!(dic_integrator_rate(0.3, x2, &g), -0.5);
            assert_eq!(dic_integrator_rate(-0.3, x2, &g), 0.5);
        }
    }

    #[test]
    fn observer_examples() {
        let g = paper_gains().with_observer(8.0, 17.6).unwrap();
        assert_eq!(observer_rate([0.0, 0.0], 0.0, &g).unwrap(), [0.0, 0.0]);
        assert_eq!(observer_rate([1.0, 0.0], 0.0, &g).unwrap(), [-8.0, -17.6]);
        assert_eq!(
            observer_rate([0.0, 0.0], 0.0, &paper_gains()),
            Err(Error::MissingObserverGains)
        );
    }

    #[test]
    fn twisting_examples() {
        assert_eq!(twisting_control(1.0, -2.0, 1.2, 0.6), -0.6);
        assert_eq!(twisting_control(0.0, 0.0, 1.2, 0.6), 0.0);
        assert!((twisting_control(-0.5, 0.1, 1.2, 0.6) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn scale_gains_examples() {
        let s = scale_gains(&paper_gains(), 3.0, false).unwrap();
        assert!((s.k1() - 2.0 * 3f64.powf(2.0 / 3.0)).abs() < 1e-14);
        assert!((s.k2() - 5.0 * 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.k3(), 1.5);
        assert_eq!(s.k4(), 0.0);
        assert_eq!(scale_gains(&paper_gains(), 1.0, true).unwrap(), paper_gains());
        assert!(scale_gains(&paper_gains(), 0.0, false).is_err());
        assert!(scale_gains(&paper_gains(), -2.0, false).is_err());
    }

    #[test]
    fn observer_gains_scale_only_on_request() {
        let g = paper_gains().with_observer(8.0, 17.6).unwrap();
        let a = scale_gains(&g, 8.0, false).unwrap();
        assert_eq!(a.observer(), g.observer());
        let b = scale_gains(&g, 8.0, true).unwrap();
        let o = b.observer().unwrap();
        assert_eq!(o.l1(), 16.0);
        assert!((o.l2() - 17.6 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn gain_validation() {
        assert!(GainSet::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(GainSet::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(GainSet::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(GainSet::new(1.0, 1.0, 1.0, -3.0).is_ok());
        assert!(paper_gains().with_observer(0.0, 1.0).is_err());
        assert!(ControlLaw::output_feedback(paper_gains()).is_err());
        assert!(ControlLaw::twisting(1.2, 0.0).is_err());
    }

    #[test]
    fn dic_control_is_continuous_twisting_is_not() {
        let g = paper_gains();
        let delta = 1e-12;
        let mut worst_dic: f64 = 0.0;
        let mut worst_twisting: f64 = 0.0;
        for i in -50..=50 {
            let a = i as f64 * 1e-3 - 0.5 * delta;
            worst_dic = worst_dic
                .max((dic_control(a, a, 0.1, &g) - dic_control(a + delta, a + delta, 0.1, &g)).abs());
            worst_twisting = worst_twisting.max(
                (twisting_control(a, a, 1.2, 0.6) - twisting_control(a + delta, a + delta, 1.2, 0.6))
                    .abs(),
            );
        }
        // cube root modulus of continuity: 2·(1e-12)^{1/3} + 5·(1e-12)^{1/2}
        assert!(worst_dic < 1e-3, "{worst_dic}");
        assert!(worst_twisting >= 3.5, "{worst_twisting}");
    }

    proptest! {
        #[test]
        fn scale_gains_composes(a in 0.05f64..20.0, b in 0.05f64..20.0) {
            let g = GainSet::new(2.0, 5.0, 0.5, 0.7).unwrap().with_observer(8.0, 17.6).unwrap();
            let two = scale_gains(&scale_gains(&g, a, true).unwrap(), b, true).unwrap();
            let one = scale_gains(&g, a * b, true).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
            prop_assert!(rel(two.k1(), one.k1()) < 1e-14);
            prop_assert!(rel(two.k2(), one.k2()) < 1e-14);
            prop_assert!(rel(two.k3(), one.k3()) < 1e-14);
            prop_assert!(rel(two.k4(), one.k4()) < 1e-14);
            prop_assert!(rel(two.observer().unwrap().l1(), one.observer().unwrap().l1()) < 1e-14);
            prop_assert!(rel(two.observer().unwrap().l2(), one.observer().unwrap().l2()) < 1e-14);
        }

        #[test]
        fn dic_control_is_homogeneous_of_degree_one(
            x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, z in -10.0f64..10.0, eps in 0.1f64..10.0
        ) {
            let g = paper_gains();
            let lhs = dic_control(eps.powi(3) * x1, eps.powi(2) * x2, eps * z, &g);
            let rhs = eps * dic_control(x1, x2, z, &g);
            let scale = eps * (2.0 * x1.abs().cbrt() + 5.0 * x2.abs().sqrt() + z.abs());
            prop_assert!((lhs - rhs).abs() <= 8.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE));
        }
    }
}
