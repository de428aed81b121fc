use alloc::vec::Vec;

use crate::controllers::GainSet;
use crate::error::{check, Error, Result};
use crate::homogeneous::{spow, SphereSampler, Weights, ONE_THIRD, TWO_THIRDS};

use super::CertificateReport;

/// Sphere extrema of the constants appearing in the output-feedback argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverConstants {
    /// `min −V̇₁` over the `x` unit sphere with exact estimates (`e = 0`).
    pub alpha1: f64,
    /// `max |∂V₁/∂x₂|` over the `x` unit sphere.
    pub alpha2: f64,
    /// `min −V̇₂` over the `e` unit sphere.
    pub alpha3: f64,
    /// `max |ω| / (k₂|e₂|^{1/2})` with `ω = k₂⌈x₂⌋^{1/2} − k₂⌈x₂ + e₂⌋^{1/2}`.
    pub c: f64,
}

/// `|⌈x₂⌋^{1/2} − ⌈x₂ + e₂⌋^{1/2}| / |e₂|^{1/2}`, bounded by `√2`.
pub fn omega_ratio(x2: f64, e2: f64) -> f64 {
    libm::fabs(spow(x2, 0.5) - spow(x2 + e2, 0.5)) / libm::sqrt(libm::fabs(e2))
}

/// The unperturbed observer loop in coordinates `s = (x₁, x₂, e₁, e₂)`,
/// `e = x̂ − x`:
///
/// ```text
/// ẋ₁ = x₂                                   ė₁ = −l₁⌈e₁⌋^{2/3} + e₂
/// ẋ₂ = −k₁⌈x₁⌋^{1/3} − k₂⌈x₂ + e₂⌋^{1/2}     ė₂ = −l₂⌈e₁⌋^{1/3}
/// ```
pub fn observer_loop_field(g: &GainSet, s: [f64; 4]) -> Result<[f64; 4]> {
    let o = g.observer().ok_or(Error::MissingObserverGains)?;
    Ok([
        s[1],
        -g.k1() * spow(s[0], ONE_THIRD) - g.k2() * spow(s[1] + s[3], 0.5),
        -o.l1() * spow(s[2], TWO_THIRDS) + s[3],
        -o.l2() * spow(s[2], ONE_THIRD),
    ])
}

/// `V(x, e) = V₁(x) + μ V₂(e)` with
/// `V₁ = γ₁|x₁|^{5/3} + γ₁₂x₁x₂ + |x₂|^{5/2}`,
/// `V₂ = |ε₁|^{5/3} + γ₂|e₂|^{5/2}`, `ε₁ = e₁ − ⌈e₂⌋^{3/2}/l₁^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfCertParams {
    gains: GainSet,
    gamma1: f64,
    gamma2: f64,
    mu: f64,
}

impl OfCertParams {
    pub fn new(gains: GainSet, gamma1: f64, gamma2: f64, mu: f64) -> Result<Self> {
        if gains.observer().is_none() {
            return Err(Error::MissingObserverGains);
        }
        for (name, v, req) in [
            ("gamma1", gamma1, "gamma1 > 0"),
            ("gamma2", gamma2, "gamma2 > 0"),
            ("mu", mu, "mu > 0"),
        ] {
            check(v > 0.0 && v.is_finite(), name, v, req)?;
        }
        Ok(Self {
            gains,
            gamma1,
            gamma2,
            mu,
        })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.gains, self.gamma1, self.gamma2, mu)
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma12(&self) -> f64 {
        2.5 * libm::pow(self.gains.k1() / self.gains.k2(), 3.0)
    }

    fn l1(&self) -> f64 {
        self.gains.observer().map_or(f64::NAN, |o| o.l1())
    }

    pub fn epsilon1(&self, e: [f64; 2]) -> f64 {
        let l1 = self.l1();
        e[0] - spow(e[1], 1.5) / (l1 * libm::sqrt(l1))
    }

    pub fn v1(&self, x: [f64; 2]) -> f64 {
        self.gamma1 * libm::pow(libm::fabs(x[0]), 5.0 / 3.0)
            + self.gamma12() * x[0] * x[1]
            + libm::pow(libm::fabs(x[1]), 2.5)
    }

    pub fn v2(&self, e: [f64; 2]) -> f64 {
        libm::pow(libm::fabs(self.epsilon1(e)), 5.0 / 3.0)
            + self.gamma2 * libm::pow(libm::fabs(e[1]), 2.5)
    }

    pub fn value(&self, s: [f64; 4]) -> f64 {
        self.v1([s[0], s[1]]) + self.mu * self.v2([s[2], s[3]])
    }

    pub fn grad_v1(&self, x: [f64; 2]) -> [f64; 2] {
        let g12 = self.gamma12();
        [
            5.0 / 3.0 * self.gamma1 * spow(x[0], TWO_THIRDS) + g12 * x[1],
            g12 * x[0] + 2.5 * spow(x[1], 1.5),
        ]
    }

    pub fn grad_v2(&self, e: [f64; 2]) -> [f64; 2] {
        let l1 = self.l1();
        let d = 5.0 / 3.0 * spow(self.epsilon1(e), TWO_THIRDS);
        [
            d,
            -1.5 * d * libm::sqrt(libm::fabs(e[1])) / (l1 * libm::sqrt(l1))
                + 2.5 * self.gamma2 * spow(e[1], 1.5),
        ]
    }

    pub fn gradient(&self, s: [f64; 4]) -> [f64; 4] {
        let a = self.grad_v1([s[0], s[1]]);
        let b = self.grad_v2([s[2], s[3]]);
        [a[0], a[1], self.mu * b[0], self.mu * b[1]]
    }

    pub fn field(&self, s: [f64; 4]) -> [f64; 4] {
        observer_loop_field(&self.gains, s).expect("observer gains checked at construction")
    }

    /// `V̇₁` along the loop, including the estimation-error coupling.
    pub fn v1dot(&self, s: [f64; 4]) -> f64 {
        let g = self.grad_v1([s[0], s[1]]);
        let f = self.field(s);
        g[0] * f[0] + g[1] * f[1]
    }

    /// `V̇₂`; the error dynamics do not depend on `x`.
    pub fn v2dot(&self, e: [f64; 2]) -> f64 {
        let g = self.grad_v2(e);
        let f = self.field([0.0, 0.0, e[0], e[1]]);
        g[0] * f[2] + g[1] * f[3]
    }

    pub fn vdot(&self, s: [f64; 4]) -> f64 {
        self.v1dot(s) + self.mu * self.v2dot([s[2], s[3]])
    }
}

fn sphere(r: &[f64]) -> Weights {
    Weights::with_default_norm(r.to_vec()).expect("static weights are valid")
}

/// Points of the `(x, e)` unit sphere (weights (3, 2, 3, 2)) with their
/// `V₁, V₂, V̇₁, V̇₂`.
fn joint_samples(p: &OfCertParams, n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut sampler = SphereSampler::new(sphere(&[3.0, 2.0, 3.0, 2.0]), seed);
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let s = sampler.next_point(&[]);
        let s = [s[0], s[1], s[2], s[3]];
        for s in [s, s.map(|v| -v)] {
            let e = [s[2], s[3]];
            out.push([p.v1([s[0], s[1]]), p.v2(e), p.v1dot(s), p.v2dot(e)]);
        }
    }
    out
}

/// `min −V̇₁` over the `x` unit sphere with `e = 0`, and `max |∂V₁/∂x₂|`.
fn x_sphere_constants(p: &OfCertParams, n: usize, seed: u64) -> (f64, f64) {
    let mut xs = SphereSampler::new(sphere(&[3.0, 2.0]), seed);
    let (mut alpha1, mut alpha2) = (f64::INFINITY, 0.0f64);
    for x in xs.sample(n, &[]) {
        alpha1 = alpha1.min(-p.v1dot([x[0], x[1], 0.0, 0.0]));
        alpha2 = alpha2.max(libm::fabs(p.grad_v1([x[0], x[1]])[1]));
    }
    (alpha1, alpha2)
}

/// `min −V̇₂` over the `e` unit sphere.
fn e_sphere_constant(p: &OfCertParams, n: usize, seed: u64) -> f64 {
    SphereSampler::new(sphere(&[3.0, 2.0]), seed)
        .sample(n, &[])
        .iter()
        .map(|e| -p.v2dot([e[0], e[1]]))
        .fold(f64::INFINITY, f64::min)
}

fn measure_constants(p: &OfCertParams, n: usize, seed: u64) -> ObserverConstants {
    let (alpha1, alpha2) = x_sphere_constants(p, n, seed.wrapping_add(1));
    let alpha3 = e_sphere_constant(p, n, seed.wrapping_add(2));
    let c = SphereSampler::new(sphere(&[2.0, 2.0]), seed.wrapping_add(3))
        .sample(n, &[])
        .iter()
        .filter(|v| v[1] != 0.0)
        .map(|v| omega_ratio(v[0], v[1]))
        .fold(0.0, f64::max);
    ObserverConstants {
        alpha1,
        alpha2,
        alpha3,
        c,
    }
}

/// Checks `V > 0` and `V̇ < 0` for the unperturbed observer loop on `2n`
/// points of the `(x, e)` sphere and records the measured constants.
pub fn certify_of(params: &OfCertParams, n: usize, seed: u64) -> CertificateReport {
    let mu = params.mu;
    let samples = joint_samples(params, n, seed);
    let mut report = CertificateReport::from_samples(
        samples
            .iter()
            .map(|q| (q[0] + mu * q[1], q[2] + mu * q[3])),
        seed,
    );
    report.observer = Some(measure_constants(params, n, seed));
    report
}

/// Smallest `μ` (to relative precision `2⁻⁴⁰`) for which the sampled
/// certificate passes, found by doubling and bisection on one fixed sample
/// set. `None` when no `μ ≤ 1e12` passes.
pub fn mu_threshold(params: &OfCertParams, n: usize, seed: u64) -> Option<f64> {
    let samples = joint_samples(params, n, seed);
    let passes = |mu: f64| {
        samples
            .iter()
            .all(|q| q[0] + mu * q[1] > 0.0 && q[2] + mu * q[3] < 0.0)
    };
    let mut hi = 1e-6;
    while !passes(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = hi / 2.0;
    if passes(lo) {
        return Some(lo);
    }
    while (hi - lo) > hi * libm::ldexp(1.0, -40) {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Picks `γ₁` and `γ₂` maximising the sampled decay constants `α₁` and
/// `α₃`, then sets `μ` to twice the sampled threshold `μ*`. Returns the
/// parameters together with `μ*`, or `None` when one of the sweeps finds no
/// strictly decreasing candidate.
///
/// The sweeps cover `γ₁ = γ₁_min·2ⁱ`, `i = 1..=16`, with
/// `γ₁_min = (3/2)(k₁/k₂)⁵`, and `γ₂ = 2^{j/2}`, `j = −40..=8`.
pub fn search_of_parameters(
    gains: &GainSet,
    n: usize,
    seed: u64,
) -> Result<Option<(OfCertParams, f64)>> {
    let gamma_min = 1.5 * libm::pow(gains.k1() / gains.k2(), 5.0);
    let mut p = OfCertParams::new(*gains, 2.0 * gamma_min, 1.0, 1.0)?;

    let mut best = (f64::NEG_INFINITY, p.gamma1);
    for i in 1..=16 {
        p.gamma1 = gamma_min * libm::ldexp(1.0, i);
        let (alpha1, _) = x_sphere_constants(&p, n, seed);
        if alpha1 > best.0 {
            best = (alpha1, p.gamma1);
        }
    }
    if !(best.0 > 0.0) {
        return Ok(None);
    }
    p.gamma1 = best.1;

    let mut best = (f64::NEG_INFINITY, p.gamma2);
    for j in -40..=8 {
        p.gamma2 = libm::pow(2.0, f64::from(j) / 2.0);
        let alpha3 = e_sphere_constant(&p, n, seed);
        if alpha3 > best.0 {
            best = (alpha3, p.gamma2);
        }
    }
    if !(best.0 > 0.0) {
        return Ok(None);
    }
    p.gamma2 = best.1;

    Ok(mu_threshold(&p, n, seed).map(|mu_star| (OfCertParams { mu: 2.0 * mu_star, ..p }, mu_star)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains() -> GainSet {
        GainSet::new(2.0, 5.0, 0.5, 0.0)
            .unwrap()
            .with_observer(8.0, 17.6)
            .unwrap()
    }

    #[test]
    fn requires_observer_gains() {
        let g = GainSet::new(2.0, 5.0, 0.5, 0.0).unwrap();
        assert_eq!(
            OfCertParams::new(g, 1.0, 1.0, 1.0),
            Err(Error::MissingObserverGains)
        );
        assert!(OfCertParams::new(gains(), 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_at_origin() {
        let p = OfCertParams::new(gains(), 1.0, 1.0, 3.0).unwrap();
        assert_eq!(p.value([0.0; 4]), 0.0);
        assert_eq!(p.vdot([0.0; 4]), 0.0);
    }

    #[test]
    fn omega_ratio_is_holder_bounded() {
        for &(a, b) in &[(1.0, -2.0), (-0.3, 0.6), (5.0, 1e-9), (0.0, 1.0)] {
            assert!(omega_ratio(a, b) <= core::f64::consts::SQRT_2 + 1e-15);
        }
        assert_eq!(omega_ratio(0.0, 4.0), 1.0);
    }
}
