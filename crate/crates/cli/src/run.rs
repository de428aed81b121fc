//! Executes one configuration and collects its metrics.

use std::path::{Path, PathBuf};

use dic_core::simulator::{
    chattering_metric, settling_metrics, simulate, ChatteringReport, SettlingReport, Trajectory,
};
use serde::Serialize;

use crate::artifacts::{summary_text, trajectory_csv, write_atomic, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::error::CliError;

/// Observer errors below this count as converged.
pub const OBSERVER_TOLERANCE: f64 = 1e-4;

pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub format_version: u32,
    pub settling: SettlingSection,
    pub chattering: ChatteringSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverSection>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettlingSection {
    pub tolerance: f64,
    pub settled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle_time: Option<f64>,
    pub window_start: f64,
    pub sup_x1: f64,
    pub sup_x2: f64,
    /// Largest homogeneous norm of `(x1, x2)` over the window.
    pub max_hom_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatteringSection {
    pub from_time: f64,
    pub max_step_jump: f64,
    pub sign_flip_fraction: f64,
    pub pairs: usize,
}

/// How well `z` tracks `−ρ` over the settled window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorSection {
    pub max_abs_z_plus_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverSection {
    pub tolerance: f64,
    /// First sample time after which both errors stay within tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged_at: Option<f64>,
    pub max_abs_e1_window: f64,
    pub max_abs_e2_window: f64,
}

/// Largest `|f(k)|` over samples `k ≥ from`.
fn window_max(from: usize, n: usize, f: impl Fn(usize) -> f64) -> f64 {
    (from..n).map(|k| f(k).abs()).fold(0.0, f64::max)
}

fn observer_section(traj: &Trajectory, from: usize) -> Option<ObserverSection> {
    let (h1, h2) = (traj.xhat1.as_ref()?, traj.xhat2.as_ref()?);
    let err = |k: usize| (h1[k] - traj.x1[k]).abs().max((h2[k] - traj.x2[k]).abs());
    let n = traj.len();
    let last_bad = (0..n).rev().find(|&k| err(k).is_nan() || err(k) > OBSERVER_TOLERANCE);
    let converged_at = match last_bad {
        None => Some(traj.t[0]),
        Some(k) if k + 1 < n => Some(traj.t[k + 1]),
        Some(_) => None,
    };
    Some(ObserverSection {
        tolerance: OBSERVER_TOLERANCE,
        converged_at,
        max_abs_e1_window: window_max(from, n, |k| h1[k] - traj.x1[k]),
        max_abs_e2_window: window_max(from, n, |k| h2[k] - traj.x2[k]),
    })
}

fn settling_section(rep: &SettlingReport, tol: f64, max_hom_norm: f64) -> SettlingSection {
    SettlingSection {
        tolerance: tol,
        settled: rep.settled(),
        settle_time: rep.settle_time,
        window_start: rep.window_start,
        sup_x1: rep.sup_x1,
        sup_x2: rep.sup_x2,
        max_hom_norm,
        nu1: rep.nu1,
        nu2: rep.nu2,
    }
}

fn chattering_section(rep: &ChatteringReport, from_time: f64) -> ChatteringSection {
    ChatteringSection {
        from_time,
        max_step_jump: rep.max_step_jump,
        sign_flip_fraction: rep.sign_flip_fraction,
        pairs: rep.pairs,
    }
}

/// Simulates `cfg` and evaluates settling, chattering, integrator and
/// observer metrics over the settled window.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let e = cfg.experiment()?;
    let traj = simulate(&*e.plant, &e.law, &e.perturbation, e.x0, e.ctrl0, &e.sim)?;
    let tol = cfg.settle_tol();
    let settling = settling_metrics(&traj, tol)?;
    let from = traj.index_at(settling.window_start);
    let w = dic_core::homogeneous::Weights::with_default_norm([3.0, 2.0])?;
    let max_hom_norm = (from..traj.len())
        .map(|k| dic_core::homogeneous::hom_norm(&[traj.x1[k], traj.x2[k]], &w))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
    let chattering = chattering_metric(&traj, settling.window_start);
    let integrator = e.gains.map(|_| IntegratorSection {
        max_abs_z_plus_rho: window_max(from, traj.len(), |k| traj.z[k] + traj.rho[k]),
    });
    let summary = RunSummary {
        format_version: FORMAT_VERSION,
        settling: settling_section(&settling, tol, max_hom_norm),
        chattering: chattering_section(&chattering, settling.window_start),
        integrator,
        observer: observer_section(&traj, from),
        config: cfg.clone(),
    };
    Ok(RunOutcome {
        trajectory: traj,
        summary,
    })
}

/// Artifact stem: `[output] name`, else the file stem, else `run`.
pub fn artifact_stem(cfg: &RunConfig, source: Option<&Path>) -> String {
    cfg.output
        .name
        .clone()
        .or_else(|| source.and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "run".to_owned())
}

/// Writes `<stem>.csv` and `<stem>.summary.toml` into `outdir`.
pub fn write_run(outdir: &Path, stem: &str, cfg: &RunConfig, out: &RunOutcome) -> Result<[PathBuf; 2], CliError> {
    let csv = outdir.join(format!("{stem}.csv"));
    let summary = outdir.join(format!("{stem}.summary.toml"));
    write_atomic(&csv, &trajectory_csv(&out.trajectory, cfg.csv_stride()))?;
    write_atomic(&summary, summary_text(&out.summary).as_bytes())?;
    Ok([csv, summary])
}
