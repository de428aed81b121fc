use alloc::vec::Vec;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::homogeneous::{hom_norm, Weights};

/// Default threshold on `‖(x₁, x₂)‖` (weights (3, 2)) for declaring a run
/// settled.
pub const DEFAULT_SETTLE_TOLERANCE: f64 = 1e-2;

/// Fraction of the horizon, counted from the end, used as the steady-state
/// window.
pub const SETTLED_WINDOW_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SettlingReport {
    /// First time after which the state stays within the tolerance through
    /// the end of the run; `None` if the last sample is outside.
    pub settle_time: Option<f64>,
    /// Start of the window the sup norms are taken over.
    pub window_start: f64,
    pub sup_x1: f64,
    pub sup_x2: f64,
    /// `sup_x1 / h³`, when settled.
    pub nu1: Option<f64>,
    /// `sup_x2 / h²`, when settled.
    pub nu2: Option<f64>,
}

impl SettlingReport {
    pub fn settled(&self) -> bool {
        self.settle_time.is_some()
    }
}

fn position_velocity_weights() -> Weights {
    Weights::with_default_norm([3.0, 2.0]).expect("static weights are valid")
}

/// Settling time and steady-state precision of a trajectory.
///
/// The sup norms are taken over `[max(T*, 0.8·t_end), t_end]`, or over the
/// last 20% of the run when it never settles.
pub fn settling_metrics(traj: &Trajectory, tol: f64) -> Result<SettlingReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "settle tolerance",
            value: tol,
            requirement: "tol > 0",
        });
    }
    if traj.is_empty() {
        return Err(Error::InvalidParameter {
            name: "trajectory length",
            value: 0.0,
            requirement: "at least one sample",
        });
    }
    let w = position_velocity_weights();
    let outside = (0..traj.len())
        .rev()
        .find(|&i| hom_norm(&[traj.x1[i], traj.x2[i]], &w).is_ok_and(|n| !(n <= tol)));
    let settle_time = match outside {
        None => Some(traj.t[0]),
        Some(i) if i + 1 < traj.len() => Some(traj.t[i + 1]),
        Some(_) => None,
    };
    let t_end = traj.t_end();
    let default_start = traj.t[0] + (1.0 - SETTLED_WINDOW_FRACTION) * (t_end - traj.t[0]);
    let window_start = settle_time.map_or(default_start, |ts| ts.max(default_start));
    let from = traj.index_at(window_start);
    let sup = |col: &[f64]| col[from..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let sup_x1 = sup(&traj.x1);
    let sup_x2 = sup(&traj.x2);
    let h = traj.step;
    let settled = settle_time.is_some();
    Ok(SettlingReport {
        settle_time,
        window_start,
        sup_x1,
        sup_x2,
        nu1: settled.then(|| sup_x1 / (h * h * h)),
        nu2: settled.then(|| sup_x2 / (h * h)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatteringReport {
    /// Largest `|u[k+1] − u[k]|` between consecutive samples.
    pub max_step_jump: f64,
    /// Fraction of consecutive sample pairs where `u` strictly changes sign.
    pub sign_flip_fraction: f64,
    pub pairs: usize,
}

/// Control-signal roughness over the samples with `t ≥ from_time`.
pub fn chattering_metric(traj: &Trajectory, from_time: f64) -> ChatteringReport {
    let u = &traj.u[traj.index_at(from_time)..];
    let pairs = u.len().saturating_sub(1);
    let mut max_jump: f64 = 0.0;
    let mut flips = 0usize;
    for w in u.windows(2) {
        max_jump = max_jump.max((w[1] - w[0]).abs());
        if w[0] * w[1] < 0.0 {
            flips += 1;
        }
    }
    ChatteringReport {
        max_step_jump: max_jump,
        sign_flip_fraction: if pairs == 0 {
            0.0
        } else {
            flips as f64 / pairs as f64
        },
        pairs,
    }
}

/// Steady-state precision against the step size.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionFit {
    pub steps: Vec<f64>,
    pub sup_x1: Vec<f64>,
    pub sup_x2: Vec<f64>,
    /// Least-squares slope of `log sup|x₁|` against `log h`; `None` when some
    /// run has `sup|x₁| = 0` (no discretization residue to fit).
    pub slope_x1: Option<f64>,
    pub slope_x2: Option<f64>,
}

impl PrecisionFit {
    pub fn is_degenerate(&self) -> bool {
        self.slope_x1.is_none() || self.slope_x2.is_none()
    }
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Runs `run(h)` for every step size and fits the precision orders.
///
/// Requires at least three step sizes spanning 1.5 decades; every run must
/// settle within `tol`.
pub fn precision_scaling_study<F>(steps: &[f64], tol: f64, mut run: F) -> Result<PrecisionFit>
where
    F: FnMut(f64) -> Result<Trajectory>,
{
    if steps.len() < 3 {
        return Err(Error::InvalidStudy("at least three step sizes are required"));
    }
    if steps.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidStudy("step sizes must be positive"));
    }
    let lo = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = steps.iter().copied().fold(0.0, f64::max);
    if libm::log10(hi / lo) < 1.5 {
        return Err(Error::InvalidStudy("step sizes must span at least 1.5 decades"));
    }
    let mut sup_x1 = Vec::with_capacity(steps.len());
    let mut sup_x2 = Vec::with_capacity(steps.len());
    for &h in steps {
        let traj = run(h)?;
        let rep = settling_metrics(&traj, tol)?;
        if !rep.settled() {
            return Err(Error::NotSettled { step: h });
        }
        sup_x1.push(rep.sup_x1);
        sup_x2.push(rep.sup_x2);
    }
    Ok(PrecisionFit {
        slope_x1: log_log_slope(steps, &sup_x1),
        slope_x2: log_log_slope(steps, &sup_x2),
        steps: steps.to_vec(),
        sup_x1,
        sup_x2,
    })
}

/// Pointwise mismatch between a trajectory and a candidate `λ`-scaled copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMismatch {
    /// `‖y(tₖ) − λx(tₖ)‖_∞ / (λ‖x(tₖ)‖_∞)` per sample, over the states
    /// `x₁, x₂, z` and the observer states when both runs have them.
    pub relative: Vec<f64>,
    pub t: Vec<f64>,
}

impl ScalingMismatch {
    pub fn max_relative(&self) -> f64 {
        self.relative.iter().copied().fold(0.0, f64::max)
    }

    /// Largest mismatch among samples with `t ≤ t_max`.
    pub fn max_relative_until(&self, t_max: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.relative)
            .take_while(|(t, _)| **t <= t_max)
            .fold(0.0, |m, (_, &r)| m.max(r))
    }

    /// First sample time whose mismatch exceeds `tol`.
    pub fn first_exceedance(&self, tol: f64) -> Option<f64> {
        self.t.iter().zip(&self.relative).find(|(_, &r)| r > tol).map(|(&t, _)| t)
    }
}

/// Compares `scaled` against `λ·base` sample by sample.
pub fn scaling_mismatch(base: &Trajectory, scaled: &Trajectory, lambda: f64) -> Result<ScalingMismatch> {
    if base.len() != scaled.len() {
        return Err(Error::DimensionMismatch {
            expected: base.len(),
            found: scaled.len(),
        });
    }
    let mut cols: Vec<(&[f64], &[f64])> = alloc::vec![
        (&base.x1, &scaled.x1),
        (&base.x2, &scaled.x2),
        (&base.z, &scaled.z),
    ];
    if let (Some(a), Some(b)) = (&base.xhat1, &scaled.xhat1) {
        cols.push((a, b));
    }
    if let (Some(a), Some(b)) = (&base.xhat2, &scaled.xhat2) {
        cols.push((a, b));
    }
    let relative = (0..base.len())
        .map(|k| {
            let (num, den) = cols.iter().fold((0.0f64, 0.0f64), |(n, d), (b, s)| {
                (n.max(libm::fabs(s[k] - lambda * b[k])), d.max(libm::fabs(lambda * b[k])))
            });
            if num == 0.0 {
                0.0
            } else {
                num / den.max(f64::MIN_POSITIVE)
            }
        })
        .collect();
    Ok(ScalingMismatch {
        relative,
        t: base.t.clone(),
    })
}
