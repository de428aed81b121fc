//! Fixed-step simulation of the closed loops.
//!
//! The control input is computed once per step from the state at the start
//! of the step and held over the step. The controller's own states (the
//! integrator `z` and the observer estimate) are advanced by the same method
//! as the plant. There is no event detection at the switching surfaces: the
//! discretization residue is exactly what the precision metrics measure.

mod metrics;

pub use metrics::{
    chattering_metric, precision_scaling_study, scaling_mismatch, settling_metrics,
    ChatteringReport, PrecisionFit, ScalingMismatch, SettlingReport, DEFAULT_SETTLE_TOLERANCE,
    SETTLED_WINDOW_FRACTION,
};

use alloc::vec::Vec;

use crate::controllers::{ControlLaw, ControllerState};
use crate::error::{check, Error, Result};
use crate::plants::{Perturbation, Plant};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    ExplicitEuler,
    /// Classical Runge-Kutta; only meaningful on smooth segments.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    step: f64,
    t_end: f64,
    method: Method,
    record_stride: usize,
}

impl SimConfig {
    pub fn new(step: f64, t_end: f64, method: Method, record_stride: usize) -> Result<Self> {
        check(step > 0.0 && step.is_finite(), "step", step, "h > 0")?;
        check(t_end >= 0.0 && t_end.is_finite(), "t_end", t_end, "t_end >= 0")?;
        check(record_stride >= 1, "record_stride", record_stride as f64, ">= 1")?;
        check(
            t_end / step < (u32::MAX as f64),
            "t_end / step",
            t_end / step,
            "fewer than 2^32 steps",
        )?;
        Ok(Self {
            step,
            t_end,
            method,
            record_stride,
        })
    }

    /// Explicit Euler, every step recorded.
    pub fn euler(step: f64, t_end: f64) -> Result<Self> {
        Self::new(step, t_end, Method::ExplicitEuler, 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    /// Number of integration steps, `round(t_end / h)`.
    pub fn n_steps(&self) -> usize {
        libm::round(self.t_end / self.step) as usize
    }
}

/// Recorded closed-loop signals. `u` at a sample is the input applied over
/// the step that starts there.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub record_stride: usize,
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub xhat1: Option<Vec<f64>>,
    pub xhat2: Option<Vec<f64>>,
}

impl Trajectory {
    fn with_capacity(step: f64, record_stride: usize, n: usize, observer: bool) -> Self {
        let col = || Vec::with_capacity(n);
        Self {
            step,
            record_stride,
            t: col(),
            x1: col(),
            x2: col(),
            z: col(),
            u: col(),
            rho: col(),
            xhat1: observer.then(col),
            xhat2: observer.then(col),
        }
    }

    fn push(&mut self, t: f64, x: [f64; 2], c: &ControllerState, u: f64, rho: f64) {
        self.t.push(t);
        self.x1.push(x[0]);
        self.x2.push(x[1]);
        self.z.push(c.z);
        self.u.push(u);
        self.rho.push(rho);
        if let (Some(a), Some(b), Some(xhat)) = (&mut self.xhat1, &mut self.xhat2, c.xhat) {
            a.push(xhat[0]);
            b.push(xhat[1]);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Spacing between recorded samples.
    pub fn sample_interval(&self) -> f64 {
        self.step * self.record_stride as f64
    }

    pub fn t_end(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    /// Index of the first sample with `t ≥ t0`.
    pub fn index_at(&self, t0: f64) -> usize {
        self.t.partition_point(|&t| t < t0)
    }
}

#[derive(Clone, Copy)]
struct LoopState {
    x: [f64; 2],
    c: ControllerState,
}

impl LoopState {
    fn is_finite(&self) -> bool {
        self.x[0].is_finite() && self.x[1].is_finite() && self.c.is_finite()
    }
}

struct Derivative {
    x: [f64; 2],
    c: crate::controllers::ControllerRate,
}

fn derivative<P: Plant + ?Sized>(
    plant: &P,
    law: &ControlLaw,
    perturbation: &Perturbation,
    t: f64,
    s: &LoopState,
    u: f64,
) -> Derivative {
    Derivative {
        x: plant.derivative(t, s.x, u, perturbation.value(t)),
        c: law.state_rate(s.x, &s.c),
    }
}

fn advance(s: &LoopState, d: &Derivative, h: f64) -> LoopState {
    LoopState {
        x: [s.x[0] + h * d.x[0], s.x[1] + h * d.x[1]],
        c: s.c.advanced(&d.c, h),
    }
}

fn rk4_step<P: Plant + ?Sized>(
    plant: &P,
    law: &ControlLaw,
    perturbation: &Perturbation,
    t: f64,
    h: f64,
    s: &LoopState,
    u: f64,
) -> LoopState {
    let k1 = derivative(plant, law, perturbation, t, s, u);
    let s2 = advance(s, &k1, 0.5 * h);
    let k2 = derivative(plant, law, perturbation, t + 0.5 * h, &s2, u);
    let s3 = advance(s, &k2, 0.5 * h);
    let k3 = derivative(plant, law, perturbation, t + 0.5 * h, &s3, u);
    let s4 = advance(s, &k3, h);
    let k4 = derivative(plant, law, perturbation, t + h, &s4, u);
    let w = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let combined = Derivative {
        x: [
            w(k1.x[0], k2.x[0], k3.x[0], k4.x[0]),
            w(k1.x[1], k2.x[1], k3.x[1], k4.x[1]),
        ],
        c: crate::controllers::ControllerRate {
            z: w(k1.c.z, k2.c.z, k3.c.z, k4.c.z),
            xhat: match (k1.c.xhat, k2.c.xhat, k3.c.xhat, k4.c.xhat) {
                (Some(a), Some(b), Some(c), Some(d)) => {
                    Some([w(a[0], b[0], c[0], d[0]), w(a[1], b[1], c[1], d[1])])
                }
                _ => None,
            },
        },
    };
    advance(s, &combined, h)
}

/// Integrates the closed loop from `(x0, ctrl0)` over `[0, t_end]`.
///
/// Deterministic: identical inputs give bit-identical trajectories. A NaN or
/// infinite state aborts with [`Error::NonFinite`] naming the step.
pub fn simulate<P: Plant + ?Sized>(
    plant: &P,
    law: &ControlLaw,
    perturbation: &Perturbation,
    x0: [f64; 2],
    ctrl0: ControllerState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    law.check_state(&ctrl0)?;
    let h = cfg.step;
    let n = cfg.n_steps();
    let stride = cfg.record_stride;
    let mut traj = Trajectory::with_capacity(h, stride, n / stride + 1, law.uses_observer());
    let mut s = LoopState { x: x0, c: ctrl0 };
    if !s.is_finite() {
        return Err(Error::NonFinite { step: 0, time: 0.0 });
    }
    for k in 0..=n {
        // time from the step index, not accumulated
        let t = k as f64 * h;
        let u = law.control(s.x, &s.c);
        if k % stride == 0 {
            traj.push(t, s.x, &s.c, u, perturbation.value(t));
        }
        if k == n {
            break;
        }
        s = match cfg.method {
            Method::ExplicitEuler => {
                let d = derivative(plant, law, perturbation, t, &s, u);
                advance(&s, &d, h)
            }
            Method::Rk4 => rk4_step(plant, law, perturbation, t, h, &s, u),
        };
        if !(s.is_finite() && u.is_finite()) {
            return Err(Error::NonFinite {
                step: k + 1,
                time: (k + 1) as f64 * h,
            });
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::GainSet;
    use crate::plants::{
        to_normal_form, ActuatedPlant, DoubleIntegrator, NormalForm, Pendulum, PendulumParams,
        Reference, ReferenceSignal,
    };

    /// Ignores the control input.
    struct OpenLoop;

    impl Plant for OpenLoop {
        fn derivative(&self, _t: f64, x: [f64; 2], _u: f64, rho: f64) -> [f64; 2] {
            [x[1], rho]
        }
    }

    #[test]
    fn euler_on_free_double_integrator() {
        let law = ControlLaw::twisting(1.0, 1.0).unwrap();
        let cfg = SimConfig::euler(0.1, 1.0).unwrap();
        let tr = simulate(
            &OpenLoop,
            &law,
            &Perturbation::zero(),
            [0.0, 1.0],
            ControllerState::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(tr.len(), 11);
        assert!((tr.x1[10] - 1.0).abs() < 1e-15);
        assert_eq!(tr.x2[10], 1.0);
        assert!((tr.t[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn record_stride_spacing() {
        let law = ControlLaw::state_feedback(GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap());
        let cfg = SimConfig::new(1e-3, 1.0, Method::ExplicitEuler, 10).unwrap();
        let tr = simulate(
            &DoubleIntegrator,
            &law,
            &Perturbation::zero(),
            [1.0, 0.0],
            ControllerState::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(tr.len(), 101);
        for w in tr.t.windows(2) {
            assert!((w[1] - w[0] - 1e-2).abs() < 1e-12);
        }
        assert!(tr.xhat1.is_none());
    }

    #[test]
    fn origin_with_compensating_integrator_is_a_fixed_point() {
        let law = ControlLaw::state_feedback(GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap());
        let rho = Perturbation::constant(0.7).unwrap();
        let cfg = SimConfig::euler(1e-2, 5.0).unwrap();
        let tr = simulate(
            &DoubleIntegrator,
            &law,
            &rho,
            [0.0, 0.0],
            ControllerState::with_integrator(-0.7),
            &cfg,
        )
        .unwrap();
        assert!(tr.x1.iter().all(|&v| v == 0.0));
        assert!(tr.x2.iter().all(|&v| v == 0.0));
        assert!(tr.z.iter().all(|&v| v == -0.7));
    }

    #[test]
    fn unstable_run_reports_non_finite_step() {
        struct Repelling;
        impl Plant for Repelling {
            fn derivative(&self, _t: f64, x: [f64; 2], _u: f64, _rho: f64) -> [f64; 2] {
                [1e3 * x[0], 1e3 * x[1]]
            }
        }
        let law = ControlLaw::state_feedback(GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap());
        let cfg = SimConfig::euler(1.0, 200.0).unwrap();
        let err = simulate(
            &Repelling,
            &law,
            &Perturbation::zero(),
            [1.0, 1.0],
            ControllerState::default(),
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn output_feedback_requires_observer_state() {
        let g = GainSet::new(2.0, 5.0, 0.5, 0.0)
            .unwrap()
            .with_observer(8.0, 17.6)
            .unwrap();
        let law = ControlLaw::output_feedback(g).unwrap();
        let cfg = SimConfig::euler(1e-2, 1.0).unwrap();
        assert!(simulate(
            &DoubleIntegrator,
            &law,
            &Perturbation::zero(),
            [1.0, 0.0],
            ControllerState::with_integrator(0.0),
            &cfg
        )
        .is_err());
    }

    #[test]
    fn rk4_conserves_pendulum_energy() {
        let p = PendulumParams::new(1.1, 1.0, 9.815).unwrap();
        let plant = Pendulum(p);
        struct Free<'a>(&'a Pendulum);
        impl Plant for Free<'_> {
            fn derivative(&self, t: f64, x: [f64; 2], _u: f64, rho: f64) -> [f64; 2] {
                self.0.derivative(t, x, 0.0, rho)
            }
        }
        let law = ControlLaw::twisting(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(1e-3, 10.0, Method::Rk4, 1).unwrap();
        let tr = simulate(
            &Free(&plant),
            &law,
            &Perturbation::zero(),
            [1.0, 0.0],
            ControllerState::default(),
            &cfg,
        )
        .unwrap();
        let energy = |th: f64, om: f64| {
            0.5 * p.mass() * p.length().powi(2) * om * om
                + p.mass() * p.gravity() * p.length() * (1.0 - th.cos())
        };
        let e0 = energy(tr.x1[0], tr.x2[0]);
        let drift = tr
            .x1
            .iter()
            .zip(&tr.x2)
            .map(|(&a, &b)| (energy(a, b) - e0).abs() / e0)
            .fold(0.0, f64::max);
        assert!(drift <= 1e-4, "{drift}");
    }

    /// The tracking-error plant with the drift evaluated numerically and the
    /// actuator torque applied through the input gain.
    struct TrackingError<'a, R: ReferenceSignal>(&'a NormalForm<Pendulum, R>);

    impl<R: ReferenceSignal> Plant for TrackingError<'_, R> {
        fn derivative(&self, t: f64, x: [f64; 2], u: f64, rho: f64) -> [f64; 2] {
            let nf = self.0;
            let xi = nf.to_plant_coordinates(t, x);
            let tau = nf.actuator_input(t, x, u);
            let plant = nf.plant();
            [
                x[1],
                plant.drift(t, xi) + rho - nf.reference().acceleration(t) + plant.input_gain() * tau,
            ]
        }
    }

    #[test]
    fn normal_form_round_trip_matches_tracking_error_plant() {
        let p = PendulumParams::new(1.1, 1.0, 9.815).unwrap();
        let reference = Reference::Sinusoid {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
        };
        let law = ControlLaw::state_feedback(GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap());
        let rho = Perturbation::sinusoid(0.4, 1.0, 0.0).unwrap();
        let cfg = SimConfig::euler(1e-3, 1.0).unwrap();
        for feed in [true, false] {
            let nf = to_normal_form(Pendulum(p), reference, feed);
            let a = simulate(&nf, &law, &rho, [2.0, 2.0], ControllerState::default(), &cfg).unwrap();
            let b = simulate(
                &TrackingError(&nf),
                &law,
                &rho,
                [2.0, 2.0],
                ControllerState::default(),
                &cfg,
            )
            .unwrap();
            for k in 0..a.len() {
                let xa = nf.to_plant_coordinates(a.t[k], [a.x1[k], a.x2[k]]);
                let xb = nf.to_plant_coordinates(b.t[k], [b.x1[k], b.x2[k]]);
                for i in 0..2 {
                    let rel = (xa[i] - xb[i]).abs() / xb[i].abs().max(1e-300);
                    assert!(rel <= 1e-10, "feed = {feed}, k = {k}: {rel}");
                }
            }
        }
    }

    #[test]
    fn unfed_reference_acceleration_enters_as_perturbation() {
        let p = PendulumParams::new(1.1, 1.0, 9.815).unwrap();
        let reference = Reference::Sinusoid {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
        };
        let nf = to_normal_form(Pendulum(p), reference, false);
        for t in [0.3, 1.0, 2.5] {
            assert!((nf.effective_perturbation(t, 0.0) - t.sin()).abs() < 1e-15);
        }
    }
}
