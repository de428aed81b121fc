//! Benchmark plants, perturbation signals and the tracking-error normal form.
//!
//! All plants here are second order, `ξ̇₁ = ξ₂`, `ξ̇₂ = f(ξ, t) + ρ(t) + b·τ`.
//! [`NormalForm`] applies `τ = (u − f + r̈)/b` in tracking-error coordinates,
//! which leaves the double integrator `ẋ₁ = x₂`, `ẋ₂ = u + ρ(t)`.

use alloc::vec::Vec;

use crate::error::{check, Result};

/// Right-hand side of a second-order plant driven by an input `u` and an
/// additive perturbation `rho`.
pub trait Plant {
    fn derivative(&self, t: f64, x: [f64; 2], u: f64, rho: f64) -> [f64; 2];
}

/// A plant `ξ̇₂ = f(ξ, t) + ρ + b·τ` with known drift `f` and input gain `b`.
pub trait ActuatedPlant: Plant {
    fn drift(&self, t: f64, x: [f64; 2]) -> f64;
    fn input_gain(&self) -> f64;
}

/// `ẋ₁ = x₂`, `ẋ₂ = u + ρ`.
pub fn double_integrator_rhs(x: [f64; 2], u: f64, rho: f64) -> [f64; 2] {
    [x[1], u + rho]
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleIntegrator;

impl Plant for DoubleIntegrator {
    fn derivative(&self, _t: f64, x: [f64; 2], u: f64, rho: f64) -> [f64; 2] {
        double_integrator_rhs(x, u, rho)
    }
}

impl ActuatedPlant for DoubleIntegrator {
    fn drift(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }

    fn input_gain(&self) -> f64 {
        1.0
    }
}

/// Frictionless pendulum parameters (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    mass: f64,
    length: f64,
    gravity: f64,
}

impl PendulumParams {
    pub fn new(mass: f64, length: f64, gravity: f64) -> Result<Self> {
        check(mass > 0.0 && mass.is_finite(), "mass", mass, "m > 0")?;
        check(length > 0.0 && length.is_finite(), "length", length, "l > 0")?;
        check(gravity > 0.0 && gravity.is_finite(), "gravity", gravity, "g > 0")?;
        Ok(Self {
            mass,
            length,
            gravity,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }
}

/// `θ̈ = −(g/l) sin θ + u/(m l²) + ρ`, with `u` the applied torque.
pub fn pendulum_rhs(x: [f64; 2], u: f64, params: &PendulumParams, rho: f64) -> [f64; 2] {
    let p = params;
    [
        x[1],
        -(p.gravity / p.length) * libm::sin(x[0]) + u / (p.mass * p.length * p.length) + rho,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum(pub PendulumParams);

impl Plant for Pendulum {
    fn derivative(&self, _t: f64, x: [f64; 2], u: f64, rho: f64) -> [f64; 2] {
        pendulum_rhs(x, u, &self.0, rho)
    }
}

impl ActuatedPlant for Pendulum {
    fn drift(&self, _t: f64, x: [f64; 2]) -> f64 {
        -(self.0.gravity / self.0.length) * libm::sin(x[0])
    }

    fn input_gain(&self) -> f64 {
        1.0 / (self.0.mass * self.0.length * self.0.length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationKind {
    Zero,
    Constant(f64),
    /// `A sin(ω t + φ)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// Piecewise-linear interpolation of `(time, value)` samples, held
    /// constant outside the table.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// A perturbation `ρ(t)` together with its Lipschitz constant `L ≥ |ρ̇|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    kind: PerturbationKind,
    lipschitz: f64,
}

impl Perturbation {
    pub fn zero() -> Self {
        Self {
            kind: PerturbationKind::Zero,
            lipschitz: 0.0,
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        check(value.is_finite(), "constant perturbation", value, "finite")?;
        Ok(Self {
            kind: PerturbationKind::Constant(value),
            lipschitz: 0.0,
        })
    }

    /// Sinusoid with the tight Lipschitz constant `|A ω|`.
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        Self::sinusoid_with_lipschitz(
            amplitude,
            frequency,
            phase,
            libm::fabs(amplitude * frequency),
        )
    }

    pub fn sinusoid_with_lipschitz(
        amplitude: f64,
        frequency: f64,
        phase: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("amplitude", amplitude),
            ("frequency", frequency),
            ("phase", phase),
        ] {
            check(v.is_finite(), name, v, "finite")?;
        }
        check(
            lipschitz >= libm::fabs(amplitude * frequency),
            "lipschitz",
            lipschitz,
            "L >= |A w|",
        )?;
        Ok(Self {
            kind: PerturbationKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            },
            lipschitz,
        })
    }

    /// Tabulated signal; `lipschitz` must bound the slope of every segment.
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        check(
            !times.is_empty() && times.len() == values.len(),
            "table length",
            times.len() as f64,
            "non-empty and equal to the number of values",
        )?;
        for w in times.windows(2) {
            check(w[1] > w[0], "table time", w[1], "strictly increasing")?;
        }
        let max_slope = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| libm::fabs((v[1] - v[0]) / (t[1] - t[0])))
            .fold(0.0, f64::max);
        check(lipschitz >= max_slope, "lipschitz", lipschitz, "L >= max table slope")?;
        Ok(Self {
            kind: PerturbationKind::Tabulated { times, values },
            lipschitz,
        })
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `λ·ρ(t)`, with Lipschitz constant `λ·L`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let kind = match &self.kind {
            PerturbationKind::Zero => PerturbationKind::Zero,
            PerturbationKind::Constant(c) => PerturbationKind::Constant(lambda * c),
            PerturbationKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => PerturbationKind::Sinusoid {
                amplitude: lambda * amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            PerturbationKind::Tabulated { times, values } => PerturbationKind::Tabulated {
                times: times.clone(),
                values: values.iter().map(|v| lambda * v).collect(),
            },
        };
        Self {
            kind,
            lipschitz: libm::fabs(lambda) * self.lipschitz,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            PerturbationKind::Zero => 0.0,
            PerturbationKind::Constant(c) => *c,
            PerturbationKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * libm::sin(frequency * t + phase),
            PerturbationKind::Tabulated { times, values } => interpolate(times, values, t),
        }
    }

    /// Analytic `ρ̇(t)`; `None` for tabulated signals.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match &self.kind {
            PerturbationKind::Zero | PerturbationKind::Constant(_) => Some(0.0),
            PerturbationKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Some(amplitude * frequency * libm::cos(frequency * t + phase)),
            PerturbationKind::Tabulated { .. } => None,
        }
    }

    /// `(ρ(t), ρ̇(t))`; the derivative is `None` when it is not available.
    pub fn eval(&self, t: f64) -> (f64, Option<f64>) {
        (self.value(t), self.derivative(t))
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    let i = times.partition_point(|&ti| ti <= t) - 1;
    let s = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + s * (values[i + 1] - values[i])
}

/// A reference `r(t)` with its first two derivatives.
pub trait ReferenceSignal {
    fn position(&self, t: f64) -> f64;
    fn velocity(&self, t: f64) -> f64;
    fn acceleration(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Zero,
    /// `A sin(ω t + φ)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl ReferenceSignal for Reference {
    fn position(&self, t: f64) -> f64 {
        match *self {
            Reference::Zero => 0.0,
            Reference::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * libm::sin(frequency * t + phase),
        }
    }

    fn velocity(&self, t: f64) -> f64 {
        match *self {
            Reference::Zero => 0.0,
            Reference::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * frequency * libm::cos(frequency * t + phase),
        }
    }

    fn acceleration(&self, t: f64) -> f64 {
        match *self {
            Reference::Zero => 0.0,
            Reference::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => -amplitude * frequency * frequency * libm::sin(frequency * t + phase),
        }
    }
}

/// A plant seen in tracking-error coordinates `x = ξ − (r, ṙ)` under the
/// feedback-linearizing input `τ = (u − f(ξ, t) + r̈)/b`.
///
/// The drift cancellation is applied symbolically, so [`Plant::derivative`]
/// returns exactly `(x₂, u + ρ)`. With `feed_rddot = false` the reference
/// acceleration is left out of `τ` and appears as `−r̈(t)` in the
/// perturbation channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForm<P, R> {
    plant: P,
    reference: R,
    feed_rddot: bool,
}

/// Wraps `plant` into its double-integrator normal form.
pub fn to_normal_form<P: ActuatedPlant, R: ReferenceSignal>(
    plant: P,
    reference: R,
    feed_rddot: bool,
) -> NormalForm<P, R> {
    NormalForm {
        plant,
        reference,
        feed_rddot,
    }
}

impl<P: ActuatedPlant, R: ReferenceSignal> NormalForm<P, R> {
    pub fn plant(&self) -> &P {
        &self.plant
    }

    pub fn reference(&self) -> &R {
        &self.reference
    }

    pub fn feeds_rddot(&self) -> bool {
        self.feed_rddot
    }

    /// `ξ = x + (r(t), ṙ(t))`.
    pub fn to_plant_coordinates(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        [
            x[0] + self.reference.position(t),
            x[1] + self.reference.velocity(t),
        ]
    }

    /// `x = ξ − (r(t), ṙ(t))`.
    pub fn from_plant_coordinates(&self, t: f64, xi: [f64; 2]) -> [f64; 2] {
        [
            xi[0] - self.reference.position(t),
            xi[1] - self.reference.velocity(t),
        ]
    }

    /// The physical input `τ` realising the normal-form input `u` at error
    /// state `x`.
    pub fn actuator_input(&self, t: f64, x: [f64; 2], u: f64) -> f64 {
        let xi = self.to_plant_coordinates(t, x);
        let rddot = if self.feed_rddot {
            self.reference.acceleration(t)
        } else {
            0.0
        };
        (u - self.plant.drift(t, xi) + rddot) / self.plant.input_gain()
    }

    /// Perturbation seen by the normal form when the plant is hit by `rho`.
    pub fn effective_perturbation(&self, t: f64, rho: f64) -> f64 {
        if self.feed_rddot {
            rho
        } else {
            rho - self.reference.acceleration(t)
        }
    }
}

impl<P: ActuatedPlant, R: ReferenceSignal> Plant for NormalForm<P, R> {
    fn derivative(&self, t: f64, x: [f64; 2], u: f64, rho: f64) -> [f64; 2] {
        [x[1], u + self.effective_perturbation(t, rho)]
    }
}
