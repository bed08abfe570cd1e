mod common;

use proptest::prelude::*;
use thermohom::config::FamilyName;
use thermohom::effective::{check_invariants, effective_coefficients};
use thermohom::tensor::Vec3;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn invariants_hold_along_the_motion(t in 0.0..0.5_f64, x0 in 0.0..1.0_f64, x1 in 0.0..1.0_f64) {
        let mut cfg = common::standard();
        cfg.geometry.cell_resolution = 8;
        cfg.transformation.slope = vec![0.08, -0.05];
        let p = cfg.problem().unwrap();
        let s = effective_coefficients(&p.cell, &p.transformation, &p.material, &p.sources, t,
                                       &Vec3::new(x0, x1, 0.0), &p.coupling.effective()).unwrap();
        let r = check_invariants(&s.effective, 1e-10);
        prop_assert!(r.passed(), "{:?}", r.violations);
        prop_assert!(s.effective.capacity > 0.0);
    }
}

/// A small inclusion barely perturbs the matrix conductivity; the threshold
/// is confirmed on the refined mesh before being asserted on the coarse one.
#[test]
fn small_inclusion_leaves_conductivity_nearly_unchanged() {
    for n in [64, 24] {
        let mut cfg = common::standard();
        cfg.geometry.radius = 0.05;
        cfg.geometry.cell_resolution = n;
        cfg.transformation.family = FamilyName::Identity;
        let p = cfg.problem().unwrap();
        let s = effective_coefficients(
            &p.cell,
            &p.transformation,
            &p.material,
            &p.sources,
            0.0,
            &Vec3::new(0.5, 0.5, 0.0),
            &p.coupling.effective(),
        )
        .unwrap();
        let k_a = p.material.matrix.conductivity.fixed_view::<2, 2>(0, 0).into_owned();
        let k = s.effective.conductivity.fixed_view::<2, 2>(0, 0).into_owned();
        let gap = (k - k_a).norm() / k_a.norm();
        assert!(gap <= 0.02, "n {n}: relative gap {gap}");
    }
}
