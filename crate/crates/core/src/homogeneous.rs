//! Signed powers and weighted homogeneity.
//!
//! A weight vector `r = (r₁, …, rₙ)` defines the dilation
//! `Δ_ε x = (ε^{r₁} x₁, …, ε^{rₙ} xₙ)` and the homogeneous norm
//! `‖x‖ = (Σ |xᵢ|^{p/rᵢ})^{1/p}`, which is 1-homogeneous under `Δ_ε`.
//! Everything the certificates check on "the unit sphere" refers to the level
//! set `‖x‖ = 1` of this norm.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check, Error, Result};

/// Norm exponent used by the crate wherever a homogeneous norm is needed
/// without an explicit choice. With weights drawn from {1, 2, 3} every `p/rᵢ`
/// is an integer.
pub const DEFAULT_NORM_EXPONENT: f64 = 6.0;

/// Points closer than this (in homogeneous distance) to a switching surface
/// are not used for pointwise checks.
pub const SWITCHING_EXCLUSION_RADIUS: f64 = 1e-6;

pub(crate) const ONE_THIRD: f64 = 1.0 / 3.0;
pub(crate) const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Sign function with `sgn(0) = 0`. NaN is passed through.
#[inline]
pub fn sgn(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        // ±0 or NaN
        z * 0.0
    }
}

/// `|a|^p` for `a ≥ 0`, routed through exact-rounded kernels for the
/// exponents the control laws use.
#[inline]
pub(crate) fn abs_pow(a: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        a
    } else if p == 0.5 {
        libm::sqrt(a)
    } else if p == ONE_THIRD {
        libm::cbrt(a)
    } else if p == TWO_THIRDS {
        let c = libm::cbrt(a);
        c * c
    } else if p == 1.5 {
        a * libm::sqrt(a)
    } else if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else {
        libm::pow(a, p)
    }
}

/// Signed power `⌈z⌋^p = |z|^p · sgn(z)` without exponent validation.
///
/// `p = 0` yields [`sgn`]. Callers guarantee `p ≥ 0`.
#[inline]
pub fn spow(z: f64, p: f64) -> f64 {
    debug_assert!(p >= 0.0, "negative exponent {p}");
    if p == 0.0 {
        sgn(z)
    } else if z >= 0.0 {
        abs_pow(z, p)
    } else {
        -abs_pow(-z, p)
    }
}

/// Signed power `⌈z⌋^p`, rejecting negative exponents.
pub fn signed_pow(z: f64, p: f64) -> Result<f64> {
    if p < 0.0 || p.is_nan() {
        return Err(Error::NegativeExponent(p));
    }
    Ok(spow(z, p))
}

/// Coordinate weights and norm exponent of a dilation.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    r: Vec<f64>,
    p: f64,
}

impl Weights {
    pub fn new(r: impl Into<Vec<f64>>, p: f64) -> Result<Self> {
        let r = r.into();
        check(!r.is_empty(), "weights", 0.0, "at least one coordinate")?;
        for &ri in &r {
            check(ri > 0.0 && ri.is_finite(), "weight", ri, "r > 0")?;
        }
        check(p >= 1.0 && p.is_finite(), "norm exponent", p, "p >= 1")?;
        Ok(Self { r, p })
    }

    /// Weights with [`DEFAULT_NORM_EXPONENT`].
    pub fn with_default_norm(r: impl Into<Vec<f64>>) -> Result<Self> {
        Self::new(r, DEFAULT_NORM_EXPONENT)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.r.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.r.len(),
                found: x.len(),
            })
        }
    }

    fn norm_unchecked(&self, x: &[f64]) -> f64 {
        let p = self.p;
        let sum: f64 = x
            .iter()
            .zip(&self.r)
            .map(|(&xi, &ri)| abs_pow(libm::fabs(xi), p / ri))
            .sum();
        abs_pow(sum, 1.0 / p)
    }

    fn dilate_unchecked(&self, x: &[f64], eps: f64) -> Vec<f64> {
        x.iter()
            .zip(&self.r)
            .map(|(&xi, &ri)| abs_pow(eps, ri) * xi)
            .collect()
    }
}

/// `Δ_ε x`, componentwise `ε^{rᵢ} xᵢ`.
pub fn dilation(x: &[f64], w: &Weights, eps: f64) -> Result<Vec<f64>> {
    w.check_dim(x)?;
    if !(eps > 0.0) {
        return Err(Error::NonPositiveScale(eps));
    }
    Ok(w.dilate_unchecked(x, eps))
}

/// Homogeneous norm `(Σ |xᵢ|^{p/rᵢ})^{1/p}`.
pub fn hom_norm(x: &[f64], w: &Weights) -> Result<f64> {
    w.check_dim(x)?;
    Ok(w.norm_unchecked(x))
}

/// A homogeneous switching function `s` of the given degree; a vector field
/// is discontinuous across `{s = 0}`.
///
/// The homogeneous distance of `x` to the surface is estimated by
/// `|s(x)|^{1/degree}`, which has the same dilation behaviour as the norm.
pub struct SwitchingSurface<'a> {
    pub function: &'a dyn Fn(&[f64]) -> f64,
    pub degree: f64,
}

impl SwitchingSurface<'_> {
    pub fn distance(&self, x: &[f64]) -> f64 {
        abs_pow(libm::fabs((self.function)(x)), 1.0 / self.degree)
    }
}

/// Draws points on the homogeneous unit sphere.
///
/// Each base point is drawn in the cube `[-1, 1]ⁿ`, half of them with
/// log-uniform magnitudes in `[1e-6, 1]` so that neighbourhoods of the
/// coordinate hyperplanes are covered, and then projected radially (along the
/// dilation orbit) onto `‖x‖ = 1`. Every point is followed by its antithetic
/// partner `-x`, so `n` requested directions yield `2n` points.
#[derive(Debug, Clone)]
pub struct SphereSampler {
    weights: Weights,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(weights: Weights, seed: u64) -> Self {
        Self {
            weights,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn direction(&mut self) -> Vec<f64> {
        let log_uniform = self.rng.random_bool(0.5);
        (0..self.weights.dim())
            .map(|_| {
                if log_uniform {
                    let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    sign * libm::pow(10.0, self.rng.random_range(-6.0..=0.0))
                } else {
                    self.rng.random_range(-1.0..=1.0)
                }
            })
            .collect()
    }

    /// Radial projection onto the unit sphere. The scale solving
    /// `‖Δ_ε y‖ = 1` is `ε = 1/‖y‖`; one correction pass removes the rounding
    /// of the first projection.
    fn project(&self, y: &[f64]) -> Option<Vec<f64>> {
        let mut x = y.to_vec();
        for _ in 0..2 {
            let n = self.weights.norm_unchecked(&x);
            if !(n > 0.0 && n.is_finite()) {
                return None;
            }
            x = self.weights.dilate_unchecked(&x, 1.0 / n);
        }
        Some(x)
    }

    /// Next point on the sphere not within [`SWITCHING_EXCLUSION_RADIUS`] of
    /// any listed surface.
    pub fn next_point(&mut self, exclusions: &[SwitchingSurface<'_>]) -> Vec<f64> {
        loop {
            let y = self.direction();
            let Some(x) = self.project(&y) else { continue };
            if exclusions
                .iter()
                .all(|s| s.distance(&x) >= SWITCHING_EXCLUSION_RADIUS)
            {
                return x;
            }
        }
    }

    /// `n` antithetic pairs, `2n` points in total.
    pub fn sample(&mut self, n: usize, exclusions: &[SwitchingSurface<'_>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let x = self.next_point(exclusions);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            out.push(x);
            out.push(neg);
        }
        out
    }
}

/// `n` antithetic pairs on the unit sphere of `w`, drawn with a seeded RNG.
pub fn sphere_sample(
    w: &Weights,
    n: usize,
    exclusions: &[SwitchingSurface<'_>],
    seed: u64,
) -> Vec<Vec<f64>> {
    SphereSampler::new(w.clone(), seed).sample(n, exclusions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityReport {
    pub tested_degree: f64,
    pub max_relative_error: f64,
    pub samples_tested: usize,
    pub passed: bool,
}

/// Settings for [`check_field_homogeneity`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityCheck {
    /// Number of antithetic sphere pairs.
    pub n_samples: usize,
    pub eps_set: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for HomogeneityCheck {
    fn default() -> Self {
        Self {
            n_samples: 50,
            eps_set: alloc::vec![0.5, 2.0, 10.0],
            tolerance: 1e-9,
            seed: 0x5eed,
        }
    }
}

/// Checks `f(Δ_ε x) = ε^degree Δ_ε f(x)` on sphere samples.
///
/// The error at one sample is `‖f(Δ_ε x) − ε^l Δ_ε f(x)‖_∞` divided by
/// `max(‖ε^l Δ_ε f(x)‖_∞, 1e-12)`.
pub fn check_field_homogeneity(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    w: &Weights,
    degree: f64,
    settings: &HomogeneityCheck,
    exclusions: &[SwitchingSurface<'_>],
) -> Result<HomogeneityReport> {
    for &eps in &settings.eps_set {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveScale(eps));
        }
    }
    let points = sphere_sample(w, settings.n_samples, exclusions, settings.seed);
    let mut max_err: f64 = 0.0;
    let mut tested = 0;
    for x in &points {
        let fx = field(x);
        w.check_dim(&fx)?;
        for &eps in &settings.eps_set {
            let lhs = field(&w.dilate_unchecked(x, eps));
            w.check_dim(&lhs)?;
            let scale = libm::pow(eps, degree);
            let rhs: Vec<f64> = w
                .dilate_unchecked(&fx, eps)
                .into_iter()
                .map(|v| scale * v)
                .collect();
            let diff = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| libm::fabs(a - b))
                .fold(0.0, f64::max);
            let reference = rhs.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max);
            let err = diff / reference.max(1e-12);
            // NaN errors must fail the check
            max_err = if err.is_nan() { f64::NAN } else { max_err.max(err) };
            tested += 1;
        }
    }
    Ok(HomogeneityReport {
        tested_degree: degree,
        max_relative_error: max_err,
        samples_tested: tested,
        passed: max_err <= settings.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn signed_pow_examples() {
        assert_eq!(signed_pow(-8.0, 1.0 / 3.0).unwrap(), -2.0);
        assert_eq!(signed_pow(-4.0, 0.0).unwrap(), -1.0);
        assert_eq!(signed_pow(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(signed_pow(9.0, 0.5).unwrap(), 3.0);
        assert_eq!(signed_pow(1.0, -0.5), Err(Error::NegativeExponent(-0.5)));
    }

    #[test]
    fn sgn_of_zero_is_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-0.0), 0.0);
        assert!(sgn(f64::NAN).is_nan());
    }

    #[test]
    fn dilation_examples() {
        let w = Weights::with_default_norm(vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(dilation(&[1.0, 1.0, 1.0], &w, 2.0).unwrap(), vec![8.0, 4.0, 2.0]);
        assert_eq!(dilation(&[0.3, -2.0, 7.0], &w, 1.0).unwrap(), vec![0.3, -2.0, 7.0]);
        assert!(matches!(
            dilation(&[1.0, 1.0], &w, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            dilation(&[1.0, 1.0, 1.0], &w, 0.0),
            Err(Error::NonPositiveScale(0.0))
        );
    }

    #[test]
    fn hom_norm_examples() {
        let w = Weights::new(vec![3.0, 2.0, 1.0], 5.0).unwrap();
        assert_eq!(hom_norm(&[0.0, 0.0, 0.0], &w).unwrap(), 0.0);
        assert_eq!(hom_norm(&[1.0, 0.0, 0.0], &w).unwrap(), 1.0);
        assert!(hom_norm(&[0.0; 2], &w).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(vec![1.0, 0.0], 2.0).is_err());
        assert!(Weights::new(vec![1.0], 0.5).is_err());
        assert!(Weights::new(Vec::new(), 2.0).is_err());
    }

    #[test]
    fn one_dimensional_sphere_is_two_points() {
        let w = Weights::new(vec![2.0], 4.0).unwrap();
        let pts = sphere_sample(&w, 1, &[], 7);
        assert_eq!(pts.len(), 2);
        let mut vals: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_points_have_unit_norm_and_antithetic_partners() {
        let w = Weights::with_default_norm(vec![3.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
        let pts = sphere_sample(&w, 500, &[], 11);
        assert_eq!(pts.len(), 1000);
        for pair in pts.chunks(2) {
            assert!((hom_norm(&pair[0], &w).unwrap() - 1.0).abs() <= 1e-12);
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn sampler_respects_exclusions() {
        let w = Weights::with_default_norm(vec![3.0, 2.0]).unwrap();
        let s = |x: &[f64]| x[0];
        let surf = [SwitchingSurface {
            function: &s,
            degree: 3.0,
        }];
        for p in sphere_sample(&w, 2000, &surf, 3) {
            assert!(surf[0].distance(&p) >= SWITCHING_EXCLUSION_RADIUS);
        }
    }

    #[test]
    fn identity_field_is_degree_zero_for_unit_weights() {
        let w = Weights::with_default_norm(vec![1.0, 1.0, 1.0]).unwrap();
        let id = |x: &[f64]| x.to_vec();
        let rep = check_field_homogeneity(&id, &w, 0.0, &HomogeneityCheck::default(), &[]).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_relative_error, 0.0);
        assert_eq!(rep.samples_tested, 100 * 3);
    }

    #[test]
    fn wrong_degree_is_detected() {
        let w = Weights::with_default_norm(vec![1.0, 1.0]).unwrap();
        let id = |x: &[f64]| x.to_vec();
        let rep = check_field_homogeneity(&id, &w, 1.0, &HomogeneityCheck::default(), &[]).unwrap();
        assert!(!rep.passed);
        assert!(rep.max_relative_error > 0.4);
    }

    proptest! {
        #[test]
        fn signed_pow_is_odd(z in -1e3f64..1e3, p in 0.0f64..4.0) {
            prop_assert_eq!(spow(-z, p), -spow(z, p));
        }

        #[test]
        fn signed_pow_is_increasing(a in -1e3f64..1e3, b in -1e3f64..1e3, p in 0.01f64..4.0) {
            prop_assume!(a < b);
            prop_assert!(spow(a, p) <= spow(b, p));
            // strictness can be lost to underflow/rounding only when the inputs are tiny or equal in float
            if (b - a).abs() > 1e-9 * (a.abs() + b.abs()).max(1e-3) {
                prop_assert!(spow(a, p) < spow(b, p));
            }
        }

        #[test]
        fn dilation_composes(x in proptest::collection::vec(-10.0f64..10.0, 3),
                             a in 0.1f64..10.0, b in 0.1f64..10.0) {
            let w = Weights::with_default_norm(vec![3.0, 2.0, 1.0]).unwrap();
            let two_step = dilation(&dilation(&x, &w, a).unwrap(), &w, b).unwrap();
            let one_step = dilation(&x, &w, a * b).unwrap();
            for (u, v) in two_step.iter().zip(&one_step) {
                prop_assert!((u - v).abs() <= 1e-13 * v.abs().max(1e-300));
            }
        }

        #[test]
        fn hom_norm_is_one_homogeneous(x in proptest::collection::vec(-10.0f64..10.0, 3),
                                       eps in 0.05f64..20.0) {
            let w = Weights::with_default_norm(vec![3.0, 2.0, 1.0]).unwrap();
            let n = hom_norm(&x, &w).unwrap();
            let nd = hom_norm(&dilation(&x, &w, eps).unwrap(), &w).unwrap();
            prop_assert!((nd - eps * n).abs() <= 4.0 * f64::EPSILON * eps * n);
            prop_assert_eq!(n == 0.0, x.iter().all(|v| *v == 0.0));
        }
    }
}
