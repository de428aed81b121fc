//! Euler solutions of the scaled gain family against `λ·x(t)` with `ρ_λ = λρ`.
//!
//! Agreement is at rounding level through the transient. Once the loop sits
//! at the origin the discrete map expands differences near `x₂ = 0` (the
//! square root has unbounded slope there), so last-bit differences between
//! the two runs grow to the size of the discretization residue.

mod common;

use common::paper_gains;
use dic_core::controllers::{scale_gains, ControlLaw, ControllerState};
use dic_core::plants::{DoubleIntegrator, Perturbation};
use dic_core::simulator::{scaling_mismatch, settling_metrics, simulate, SimConfig, Trajectory};

const LAMBDA: f64 = 3.0;
const TRANSIENT: f64 = 10.0;

fn run(law: &ControlLaw, pert: &Perturbation, x0: [f64; 2], c0: ControllerState) -> Trajectory {
    let cfg = SimConfig::euler(1e-3, 30.0).unwrap();
    simulate(&DoubleIntegrator, law, pert, x0, c0, &cfg).unwrap()
}

fn pert() -> Perturbation {
    Perturbation::sinusoid(0.4, 1.0, 0.0).unwrap()
}

fn sf_pair() -> (Trajectory, Trajectory) {
    let g = paper_gains();
    let base = run(
        &ControlLaw::state_feedback(g),
        &pert(),
        [2.0, 2.0],
        ControllerState::with_integrator(0.1),
    );
    let scaled = run(
        &ControlLaw::state_feedback(scale_gains(&g, LAMBDA, false).unwrap()),
        &pert().scaled(LAMBDA),
        [2.0 * LAMBDA, 2.0 * LAMBDA],
        ControllerState::with_integrator(0.1 * LAMBDA),
    );
    (base, scaled)
}

fn of_pair() -> (Trajectory, Trajectory) {
    let g = paper_gains().with_observer(8.0, 17.6).unwrap();
    let base = run(
        &ControlLaw::output_feedback(g).unwrap(),
        &pert(),
        [2.0, 2.0],
        ControllerState::with_observer(0.1, [1.0, -0.5]),
    );
    let scaled = run(
        &ControlLaw::output_feedback(scale_gains(&g, LAMBDA, true).unwrap()).unwrap(),
        &pert().scaled(LAMBDA),
        [2.0 * LAMBDA, 2.0 * LAMBDA],
        ControllerState::with_observer(0.1 * LAMBDA, [LAMBDA, -0.5 * LAMBDA]),
    );
    (base, scaled)
}

#[test]
fn state_feedback_transient_scales() {
    let (base, scaled) = sf_pair();
    let m = scaling_mismatch(&base, &scaled, LAMBDA).unwrap();
    let err = m.max_relative_until(TRANSIENT);
    assert!(err < 1e-9, "relative error {err:e}");
}

#[test]
fn output_feedback_transient_scales() {
    let (base, scaled) = of_pair();
    let m = scaling_mismatch(&base, &scaled, LAMBDA).unwrap();
    let err = m.max_relative_until(TRANSIENT);
    assert!(err < 1e-9, "relative error {err:e}");
}

#[test]
fn steady_state_residues_have_matching_size() {
    for (base, scaled) in [sf_pair(), of_pair()] {
        let a = settling_metrics(&base, 1e-2).unwrap();
        let b = settling_metrics(&scaled, 1e-2).unwrap();
        assert!(b.sup_x1 <= 10.0 * LAMBDA * a.sup_x1.max(1e-12), "{a:?} {b:?}");
        assert!(b.sup_x2 <= 10.0 * LAMBDA * a.sup_x2.max(1e-12), "{a:?} {b:?}");
    }
}

#[test]
fn mismatch_rejects_different_lengths() {
    let (base, _) = sf_pair();
    let cfg = SimConfig::euler(1e-3, 1.0).unwrap();
    let short = simulate(
        &DoubleIntegrator,
        &ControlLaw::state_feedback(paper_gains()),
        &pert(),
        [2.0, 2.0],
        ControllerState::default(),
        &cfg,
    )
    .unwrap();
    assert!(scaling_mismatch(&base, &short, LAMBDA).is_err());
}
