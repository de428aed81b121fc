use crate::controllers::GainSet;
use crate::error::{check, Result};

use super::{certify_sf, CertificateReport, Failure, SfCertParams};

/// `γ₁` levels tried per candidate gain set: `γ₁_min·2ⁱ`, `i = 1..=GAMMA_LEVELS`.
const GAMMA_LEVELS: i32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// The certified parameters, expressed for the final gain set.
    pub params: Option<SfCertParams>,
    /// Report of the certified candidate, or of the best one on failure.
    pub report: CertificateReport,
    /// Scaling `λ` between the base gains the function is written in and
    /// the certified gains.
    pub lambda: f64,
    /// Certificate evaluations spent.
    pub evaluations: usize,
    /// Smallest normalised `max V̇ / max V` seen; negative means certified.
    pub best_margin: f64,
}

/// Searches for a state-feedback certificate for the given `k₃` and `L`.
///
/// Candidates come from the scaling family: for `λ = 1, 2, 4, …` the base
/// gains `(k₁, k₂, k₃/λ, λ^{3/2}k₄)` with bound `L/λ` are tried with
/// `γ₁ = γ₁_min·2ⁱ`; a base certificate carries over to
/// `scale_gains(base, λ)`, which keeps `k₃` and `L`. At most `budget`
/// certificate evaluations with `n` sample pairs each are spent.
pub fn search_parameters(
    gains: &GainSet,
    lipschitz: f64,
    budget: usize,
    n: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if gains.k3() <= lipschitz {
        return Ok(SearchOutcome {
            params: None,
            report: CertificateReport::rejected(Failure::IntegratorTooWeak, seed),
            lambda: 1.0,
            evaluations: 0,
            best_margin: f64::INFINITY,
        });
    }
    check(budget >= 1, "budget", budget as f64, "budget >= 1")?;
    let mut evaluations = 0;
    let mut best: Option<(f64, CertificateReport, f64)> = None;
    let mut lambda = 1.0;
    loop {
        let base = GainSet::new(
            gains.k1(),
            gains.k2(),
            gains.k3() / lambda,
            gains.k4() * lambda * libm::sqrt(lambda),
        )?;
        let gamma_min = SfCertParams::gamma1_threshold(&base);
        for i in 1..=GAMMA_LEVELS {
            if evaluations >= budget {
                let (best_margin, report, lambda) = best.expect("budget >= 1 evaluates once");
                return Ok(SearchOutcome {
                    params: None,
                    report,
                    lambda,
                    evaluations,
                    best_margin,
                });
            }
            let p = SfCertParams::new(base, lipschitz / lambda, gamma_min * libm::ldexp(1.0, i))?;
            let report = certify_sf(&p, n, seed);
            evaluations += 1;
            if report.passed {
                return Ok(SearchOutcome {
                    params: Some(p.transferred(lambda)?),
                    best_margin: margin(&p, &report),
                    report,
                    lambda,
                    evaluations,
                });
            }
            let m = margin(&p, &report);
            if best.as_ref().is_none_or(|b| m < b.0) {
                best = Some((m, report, lambda));
            }
        }
        lambda *= 2.0;
    }
}

/// `max V̇` relative to the size of `V` on the sphere, comparable across
/// `γ₁` levels.
fn margin(p: &SfCertParams, r: &CertificateReport) -> f64 {
    r.max_vdot / (p.gamma1() + 1.0)
}
