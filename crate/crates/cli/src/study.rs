//! Batch studies: precision orders, gain-scaling invariance, certificates.

use dic_core::controllers::{scale_gains, ControlLaw, ControllerState, GainSet};
use dic_core::lyapunov::{
    certify_of, certify_sf, search_of_parameters, search_parameters, CertificateReport, Failure,
};
use dic_core::plants::DoubleIntegrator;
use dic_core::simulator::{
    precision_scaling_study, scaling_mismatch, simulate, SimConfig, Trajectory,
};
use serde::Serialize;

use crate::artifacts::FORMAT_VERSION;
use crate::config::{ControllerKind, RunConfig};
use crate::error::CliError;

pub const PRECISION_STEPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
/// The coarsest steps leave a residue near 1e-2, so settling is judged
/// at a looser threshold than for single runs.
pub const PRECISION_SETTLE_TOL: f64 = 0.1;
pub const SLOPE_X1_BAND: [f64; 2] = [2.5, 3.5];
pub const SLOPE_X2_BAND: [f64; 2] = [1.5, 2.5];
pub const SCALING_TOLERANCE: f64 = 1e-9;

/// A study record plus whether its criterion held (`None`: no criterion).
pub struct StudyResult<R> {
    pub record: R,
    pub passed: Option<bool>,
}

impl<R> StudyResult<R> {
    /// `Err(StudyFailed)` when the criterion did not hold.
    pub fn verdict(&self, what: &str) -> Result<(), CliError> {
        match self.passed {
            Some(false) => Err(CliError::StudyFailed(what.to_owned())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionRecord {
    pub format_version: u32,
    pub study: &'static str,
    pub settle_tol: f64,
    pub steps: Vec<f64>,
    pub sup_x1: Vec<f64>,
    pub sup_x2: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_x2: Option<f64>,
    pub slope_x1_band: [f64; 2],
    pub slope_x2_band: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub config: RunConfig,
}

fn in_band(v: Option<f64>, band: [f64; 2]) -> bool {
    v.is_some_and(|v| band[0] <= v && v <= band[1])
}

fn run_with_step(cfg: &RunConfig, h: f64) -> Result<Trajectory, CliError> {
    let mut c = cfg.clone();
    c.sim.step = h;
    let e = c.experiment()?;
    Ok(simulate(&*e.plant, &e.law, &e.perturbation, e.x0, e.ctrl0, &e.sim)?)
}

/// Fits the steady-state precision orders of `cfg` over `steps`, one
/// thread per step size. Twisting runs are recorded without a verdict.
pub fn precision(cfg: &RunConfig, steps: &[f64], settle_tol: f64) -> Result<StudyResult<PrecisionRecord>, CliError> {
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = steps.iter().map(|&h| s.spawn(move || run_with_step(cfg, h))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut runs = runs.into_iter();
    let fit = precision_scaling_study(steps, settle_tol, |_| Ok(runs.next().expect("one run per step")))
    .map_err(|e| match e {
        dic_core::Error::NotSettled { step } => {
            CliError::StudyFailed(format!("run with h = {step} did not settle within {settle_tol}"))
        }
        dic_core::Error::InvalidStudy(msg) => CliError::Invalid {
            section: "study",
            key: "steps",
            message: msg.into(),
        },
        other => CliError::Numeric(other),
    })?;
    let passed = (cfg.controller.kind != ControllerKind::Twisting)
        .then(|| in_band(fit.slope_x1, SLOPE_X1_BAND) && in_band(fit.slope_x2, SLOPE_X2_BAND));
    Ok(StudyResult {
        record: PrecisionRecord {
            format_version: FORMAT_VERSION,
            study: "precision",
            settle_tol,
            steps: fit.steps,
            sup_x1: fit.sup_x1,
            sup_x2: fit.sup_x2,
            slope_x1: fit.slope_x1,
            slope_x2: fit.slope_x2,
            slope_x1_band: SLOPE_X1_BAND,
            slope_x2_band: SLOPE_X2_BAND,
            passed,
            config: cfg.clone(),
        },
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRecord {
    pub format_version: u32,
    pub study: &'static str,
    /// Both loops run on the double integrator, the only plant the
    /// scaling maps onto itself.
    pub plant: &'static str,
    pub lambda: f64,
    pub step: f64,
    pub t_end: f64,
    pub tolerance: f64,
    pub max_relative_mismatch: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_exceedance: Option<f64>,
    pub passed: bool,
    pub config: RunConfig,
}

fn scaled_state(c: &ControllerState, lambda: f64) -> ControllerState {
    ControllerState {
        z: lambda * c.z,
        xhat: c.xhat.map(|x| x.map(|v| lambda * v)),
    }
}

/// Compares the loop of `cfg` with its `λ`-scaled counterpart: gains
/// through `scale_gains` (observer gains included), initial state and
/// perturbation multiplied by `λ`.
pub fn scaling(cfg: &RunConfig, lambda: f64, step: f64, t_end: f64) -> Result<StudyResult<ScalingRecord>, CliError> {
    let e = cfg.experiment()?;
    let g = e.gains.ok_or_else(|| CliError::Invalid {
        section: "controller",
        key: "type",
        message: "the scaling study needs a discontinuous integral controller".into(),
    })?;
    let observer = g.observer().is_some();
    let law_for = |g: GainSet| -> Result<ControlLaw, CliError> {
        Ok(if observer {
            ControlLaw::output_feedback(g)?
        } else {
            ControlLaw::state_feedback(g)
        })
    };
    let sim = SimConfig::euler(step, t_end)?;
    let base = simulate(&DoubleIntegrator, &law_for(g)?, &e.perturbation, e.x0, e.ctrl0, &sim)?;
    let scaled = simulate(
        &DoubleIntegrator,
        &law_for(scale_gains(&g, lambda, observer)?)?,
        &e.perturbation.scaled(lambda),
        e.x0.map(|v| lambda * v),
        scaled_state(&e.ctrl0, lambda),
        &sim,
    )?;
    let m = scaling_mismatch(&base, &scaled, lambda)?;
    let worst = m.max_relative();
    let passed = worst <= SCALING_TOLERANCE;
    Ok(StudyResult {
        record: ScalingRecord {
            format_version: FORMAT_VERSION,
            study: "scaling",
            plant: "double-integrator",
            lambda,
            step,
            t_end,
            tolerance: SCALING_TOLERANCE,
            max_relative_mismatch: worst,
            first_exceedance: m.first_exceedance(SCALING_TOLERANCE),
            passed,
            config: cfg.clone(),
        },
        passed: Some(passed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyArgs {
    pub gains: GainSet,
    pub lipschitz: f64,
    /// Sample pairs for the final check.
    pub samples: usize,
    /// Sample pairs per candidate during the search.
    pub search_samples: usize,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSection {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<&'static str>,
    pub min_v: f64,
    pub max_vdot: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl From<&CertificateReport> for ReportSection {
    fn from(r: &CertificateReport) -> Self {
        Self {
            passed: r.passed,
            failure: r.failure.map(Failure::describe),
            min_v: r.min_v,
            max_vdot: r.max_vdot,
            kappa: r.kappa,
            samples: r.samples,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainsSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
}

impl From<&GainSet> for GainsSection {
    fn from(g: &GainSet) -> Self {
        Self {
            k1: g.k1(),
            k2: g.k2(),
            k3: g.k3(),
            k4: g.k4(),
            l1: g.observer().map(|o| o.l1()),
            l2: g.observer().map(|o| o.l2()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfSection {
    pub lipschitz: f64,
    pub evaluations: usize,
    pub best_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma12: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_gains: Option<GainsSection>,
    pub search: ReportSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recheck: Option<ReportSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfSection {
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyRecord {
    pub format_version: u32,
    pub study: &'static str,
    pub gains: GainsSection,
    pub state_feedback: SfSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_feedback: Option<OfSection>,
}

/// Certifies the perturbed state-feedback loop (searching the scaling
/// family) and, when observer gains are given, the unperturbed
/// output-feedback loop.
pub fn certify(args: &CertifyArgs) -> Result<StudyResult<CertifyRecord>, CliError> {
    let out = search_parameters(&args.gains, args.lipschitz, args.budget, args.search_samples, args.seed)?;
    let recheck = out
        .params
        .as_ref()
        .map(|p| certify_sf(p, args.samples, args.seed.wrapping_add(1)));
    let sf_passed = recheck.as_ref().is_some_and(|r| r.passed);
    let state_feedback = SfSection {
        lipschitz: args.lipschitz,
        evaluations: out.evaluations,
        best_margin: out.best_margin,
        lambda: out.params.as_ref().map(|_| out.lambda),
        gamma1: out.params.as_ref().map(|p| p.gamma1()),
        gamma12: out.params.as_ref().map(|p| p.gamma12()),
        certified_gains: out.params.as_ref().map(|p| p.gains().into()),
        search: (&out.report).into(),
        recheck: recheck.as_ref().map(Into::into),
    };

    let output_feedback = match args.gains.observer() {
        None => None,
        Some(_) if !sf_passed => None,
        Some(_) => Some(match search_of_parameters(&args.gains, args.search_samples, args.seed)? {
            None => OfSection {
                found: false,
                gamma1: None,
                gamma2: None,
                mu: None,
                mu_threshold: None,
                report: None,
                alpha1: None,
                alpha2: None,
                alpha3: None,
                c: None,
            },
            Some((p, mu_star)) => {
                let r = certify_of(&p, args.samples, args.seed.wrapping_add(1));
                let k = r.observer;
                OfSection {
                    found: true,
                    gamma1: Some(p.gamma1()),
                    gamma2: Some(p.gamma2()),
                    mu: Some(p.mu()),
                    mu_threshold: Some(mu_star),
                    report: Some((&r).into()),
                    alpha1: k.map(|k| k.alpha1),
                    alpha2: k.map(|k| k.alpha2),
                    alpha3: k.map(|k| k.alpha3),
                    c: k.map(|k| k.c),
                }
            }
        }),
    };
    let of_passed = output_feedback
        .as_ref()
        .is_none_or(|o| o.report.as_ref().is_some_and(|r| r.passed));
    let passed = sf_passed && (args.gains.observer().is_none() || of_passed && output_feedback.is_some());
    Ok(StudyResult {
        record: CertifyRecord {
            format_version: FORMAT_VERSION,
            study: "certify",
            gains: (&args.gains).into(),
            state_feedback,
            output_feedback,
        },
        passed: Some(passed),
    })
}
