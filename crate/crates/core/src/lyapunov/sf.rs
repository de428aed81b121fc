use crate::controllers::{scale_gains, GainSet};
use crate::error::{check, Error, Result};
use crate::homogeneous::{sgn, spow, SphereSampler, SwitchingSurface, Weights, ONE_THIRD, TWO_THIRDS};

use super::{CertificateReport, Failure};

/// `α(ξ₁, x₃) = ⌈ξ₁ + ⌈x₃⌋³/k₁³⌋^{1/3} − ⌈ξ₁⌋^{1/3} − x₃/k₁`, the part of the
/// `x₂` dynamics that vanishes when either argument does.
pub fn alpha(xi1: f64, x3: f64, k1: f64) -> f64 {
    let k1_cubed = k1 * k1 * k1;
    spow(xi1 + spow(x3, 3.0) / k1_cubed, ONE_THIRD) - spow(xi1, ONE_THIRD) - x3 / k1
}

/// The three groups `V̇ = W₁ + W₂ + W₃` of the state-feedback Lyapunov
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WTerms {
    /// Nominal second-order part, as if `x₃` were already zero.
    pub w1: f64,
    /// Coupling through `α(ξ₁, x₃)`.
    pub w2: f64,
    /// Integrator and perturbation part.
    pub w3: f64,
}

impl WTerms {
    pub fn sum(&self) -> f64 {
        self.w1 + self.w2 + self.w3
    }
}

/// Lyapunov function of the perturbed state-feedback loop in the coordinates
/// `x = (x₁, x₂, x₃)`, `x₃ = z + ρ`:
///
/// `V = γ₁|ξ₁|^{5/3} + γ₁₂ ξ₁ x₂ + |x₂|^{5/2} + |x₃|⁵/5`,
/// `ξ₁ = x₁ − ⌈x₃⌋³/k₁³`, `γ₁₂ = (5/2)(k₁/k₂)³`.
///
/// A certificate found for one gain set transfers to `scale_gains(g, λ)`
/// with Lipschitz bound `λL` through `V_λ(x) = V(x/λ)`; [`Self::transferred`]
/// builds that function, and every evaluation below works in either form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfCertParams {
    gains: GainSet,
    lipschitz: f64,
    gamma1: f64,
    /// `μ` with `V(x) = V_base(μx)`.
    scale: f64,
    base: GainSet,
}

impl SfCertParams {
    pub fn new(gains: GainSet, lipschitz: f64, gamma1: f64) -> Result<Self> {
        check(
            lipschitz >= 0.0 && lipschitz.is_finite(),
            "L",
            lipschitz,
            "L >= 0",
        )?;
        check(
            gamma1 > Self::gamma1_threshold(&gains) && gamma1.is_finite(),
            "gamma1",
            gamma1,
            "gamma1 > (3/2)(k1/k2)^5",
        )?;
        Ok(Self {
            gains,
            lipschitz,
            gamma1,
            scale: 1.0,
            base: gains,
        })
    }

    /// Positive-definiteness threshold `(3/2)(k₁/k₂)⁵` for `γ₁`.
    pub fn gamma1_threshold(gains: &GainSet) -> f64 {
        1.5 * libm::pow(gains.k1() / gains.k2(), 5.0)
    }

    /// The certificate candidate for `scale_gains(gains, λ)` and `λL`.
    pub fn transferred(&self, lambda: f64) -> Result<Self> {
        Ok(Self {
            gains: scale_gains(&self.gains, lambda, false)?,
            lipschitz: lambda * self.lipschitz,
            gamma1: self.gamma1,
            scale: self.scale / lambda,
            base: self.base,
        })
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// `γ₁₂ = (5/2)(k₁/k₂)³` of the base gains.
    pub fn gamma12(&self) -> f64 {
        2.5 * libm::pow(self.base.k1() / self.base.k2(), 3.0)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Gains the function is written in; equal to [`Self::gains`] unless the
    /// certificate was transferred.
    pub fn base_gains(&self) -> &GainSet {
        &self.base
    }

    pub fn base_lipschitz(&self) -> f64 {
        self.scale * self.lipschitz
    }

    fn in_base(&self, x: [f64; 3]) -> [f64; 3] {
        x.map(|v| self.scale * v)
    }

    fn xi1(&self, y: [f64; 3]) -> f64 {
        let k1 = self.base.k1();
        y[0] - spow(y[2], 3.0) / (k1 * k1 * k1)
    }

    /// `(∂V/∂x₁, ∂V/∂x₂)` in base coordinates, i.e. the paper's `A` and `B`.
    fn ab(&self, y: [f64; 3], xi1: f64) -> (f64, f64) {
        let g12 = self.gamma12();
        let a = 5.0 / 3.0 * self.gamma1 * spow(xi1, TWO_THIRDS) + g12 * y[1];
        let b = g12 * xi1 + 2.5 * spow(y[1], 1.5);
        (a, b)
    }

    fn base_value(&self, y: [f64; 3]) -> f64 {
        let xi1 = self.xi1(y);
        self.gamma1 * libm::pow(libm::fabs(xi1), 5.0 / 3.0)
            + self.gamma12() * xi1 * y[1]
            + libm::pow(libm::fabs(y[1]), 2.5)
            + libm::pow(libm::fabs(y[2]), 5.0) / 5.0
    }

    fn base_gradient(&self, y: [f64; 3]) -> [f64; 3] {
        let xi1 = self.xi1(y);
        let (a, b) = self.ab(y, xi1);
        let k1 = self.base.k1();
        let d3 = -3.0 * y[2] * y[2] / (k1 * k1 * k1) * a + spow(y[2], 4.0);
        [a, b, d3]
    }

    fn base_field(&self, y: [f64; 3], rho_dot: f64) -> Result<[f64; 3]> {
        field_of(&self.base, y, rho_dot)
    }

    /// `V(x)`.
    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.base_value(self.in_base(x))
    }

    /// Analytic `∇V(x)`.
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        self.base_gradient(self.in_base(x)).map(|d| self.scale * d)
    }

    /// Closed-loop error field with the (possibly transferred) gains.
    pub fn field(&self, x: [f64; 3], rho_dot: f64) -> Result<[f64; 3]> {
        field_of(&self.gains, x, rho_dot)
    }

    /// `V̇ = ∇V(x)·f(x, ρ̇)`; rejected on the switching set.
    pub fn vdot(&self, x: [f64; 3], rho_dot: f64) -> Result<f64> {
        let g = self.gradient(x);
        let f = self.field(x, rho_dot)?;
        Ok(g[0] * f[0] + g[1] * f[1] + g[2] * f[2])
    }

    /// `max_{|ρ̇| ≤ L} V̇`; `V̇` is affine in `ρ̇` with slope `∂V/∂x₃`.
    pub fn vdot_worst(&self, x: [f64; 3]) -> Result<f64> {
        let nominal = self.vdot(x, 0.0)?;
        Ok(nominal + self.lipschitz * libm::fabs(self.gradient(x)[2]))
    }

    fn base_vdot_worst(&self, y: [f64; 3]) -> Result<f64> {
        let g = self.base_gradient(y);
        let f = self.base_field(y, 0.0)?;
        Ok(g[0] * f[0] + g[1] * f[1] + g[2] * f[2] + self.base_lipschitz() * libm::fabs(g[2]))
    }

    /// The grouped form `W₁ + W₂ + W₃`, assembled from `ξ₁` and `α` rather
    /// than from the field.
    pub fn w_terms(&self, x: [f64; 3], rho_dot: f64) -> Result<WTerms> {
        let y = self.in_base(x);
        let rho_dot = self.scale * rho_dot;
        let (k1, k2, k3, k4) = (self.base.k1(), self.base.k2(), self.base.k3(), self.base.k4());
        let s = y[0] + k4 * spow(y[1], 1.5);
        if s == 0.0 {
            return Err(Error::OnSwitchingSet);
        }
        let xi1 = self.xi1(y);
        let (a, b) = self.ab(y, xi1);
        let w1 = a * y[1] + b * (-k1 * spow(xi1, ONE_THIRD) - k2 * spow(y[1], 0.5));
        let w2 = -k1 * b * alpha(xi1, y[2], k1);
        let w3 = (k3 * sgn(s) - rho_dot)
            * y[2]
            * y[2]
            * (3.0 / (k1 * k1 * k1) * a - spow(y[2], 2.0));
        Ok(WTerms { w1, w2, w3 })
    }
}

fn field_of(g: &GainSet, x: [f64; 3], rho_dot: f64) -> Result<[f64; 3]> {
    let s = x[0] + g.k4() * spow(x[1], 1.5);
    if s == 0.0 {
        return Err(Error::OnSwitchingSet);
    }
    Ok([
        x[1],
        -g.k1() * spow(x[0], ONE_THIRD) - g.k2() * spow(x[1], 0.5) + x[2],
        -g.k3() * sgn(s) + rho_dot,
    ])
}

/// Checks `V > 0` and `max_{|ρ̇|≤L} V̇ < 0` on `2n` points of the unit sphere
/// (weights (3, 2, 1)) of the base coordinates.
///
/// Fails immediately, with no samples evaluated, when `k₃ ≤ L`.
pub fn certify_sf(params: &SfCertParams, n: usize, seed: u64) -> CertificateReport {
    if params.gains.k3() <= params.lipschitz {
        return CertificateReport::rejected(Failure::IntegratorTooWeak, seed);
    }
    let w = Weights::with_default_norm([3.0, 2.0, 1.0]).expect("static weights are valid");
    let k4 = params.base.k4();
    let switching = |y: &[f64]| y[0] + k4 * spow(y[1], 1.5);
    let exclusions = [SwitchingSurface {
        function: &switching,
        degree: 3.0,
    }];
    let mut sampler = SphereSampler::new(w, seed);
    let values = (0..n).flat_map(|_| {
        let p = sampler.next_point(&exclusions);
        let y = [p[0], p[1], p[2]];
        [y, y.map(|v| -v)].map(|y| {
            let vd = params
                .base_vdot_worst(y)
                .expect("excluded points are off the switching set");
            (params.base_value(y), vd)
        })
    });
    CertificateReport::from_samples(values, seed)
}
