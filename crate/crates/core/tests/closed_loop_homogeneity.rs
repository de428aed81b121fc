mod common;

use common::*;
use dic_core::homogeneous::{check_field_homogeneity, HomogeneityCheck, SwitchingSurface, Weights};
use dic_core::controllers::GainSet;

fn settings() -> HomogeneityCheck {
    HomogeneityCheck {
        n_samples: 100,
        ..HomogeneityCheck::default()
    }
}

fn gain_sets() -> [GainSet; 2] {
    [
        paper_gains().with_observer(8.0, 17.6).unwrap(),
        GainSet::new(3.1, 2.2, 0.9, -0.7)
            .unwrap()
            .with_observer(5.0, 9.0)
            .unwrap(),
    ]
}

#[test]
fn state_feedback_loop_has_degree_minus_one() {
    let w = Weights::with_default_norm([3.0, 2.0, 1.0]).unwrap();
    for g in gain_sets() {
        let s = sf_switching(g.k4());
        let ex = [SwitchingSurface { function: &s, degree: 3.0 }];
        let field = |x: &[f64]| sf_error_field(&g, x);
        let r = check_field_homogeneity(&field, &w, -1.0, &settings(), &ex).unwrap();
        assert!(r.passed && r.max_relative_error < 1e-9, "{r:?}");
        assert_eq!(r.samples_tested, 600);
    }
}

#[test]
fn output_feedback_loop_has_degree_minus_one() {
    let w = Weights::with_default_norm([3.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
    for g in gain_sets() {
        let s = of_switching(g.k4());
        let ex = [SwitchingSurface { function: &s, degree: 3.0 }];
        let field = |x: &[f64]| of_error_field(&g, x);
        let r = check_field_homogeneity(&field, &w, -1.0, &settings(), &ex).unwrap();
        assert!(r.passed && r.max_relative_error < 1e-9, "{r:?}");
    }
}

#[test]
fn wrong_degree_is_detected() {
    let w = Weights::with_default_norm([3.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
    let g = gain_sets()[0];
    let s = of_switching(0.0);
    let ex = [SwitchingSurface { function: &s, degree: 3.0 }];
    let field = |x: &[f64]| of_error_field(&g, x);
    let r = check_field_homogeneity(&field, &w, 0.0, &settings(), &ex).unwrap();
    assert!(!r.passed);
}
