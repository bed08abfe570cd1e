mod common;

use proptest::prelude::*;
use thermohom::kinematics::{eval_interface, eval_kinematics, transformed_coefficients, Amplitude, Phase, Transformation};
use thermohom::tensor::Vec3;

fn growth(rate: f64, sx: f64, sy: f64) -> Transformation {
    Transformation::radial_growth(2, 0.25, Amplitude { rate, slope: Vec3::new(sx, sy, 0.0) }, 0.1).unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0_f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // |g| stays below 0.11, inside the admissible range of the cutoff
    #[test]
    fn jacobian_is_the_determinant(rate in -0.06..0.06_f64, sx in -0.05..0.05_f64, sy in -0.05..0.05_f64,
                                   t in 0.0..1.0_f64, x0 in unit(), x1 in unit(), y0 in unit(), y1 in unit()) {
        let tr = growth(rate, sx, sy);
        let k = eval_kinematics(&tr, t, &Vec3::new(x0, x1, 0.0), &Vec3::new(y0, y1, 0.0)).unwrap();
        prop_assert!((k.jacobian - k.gradient.determinant()).abs() <= 1e-12);
    }

    #[test]
    fn motion_vanishes_near_the_cell_boundary(rate in -0.3..0.3_f64, t in 0.0..1.0_f64, along in unit(),
                                              depth in 0.0..0.05_f64, side in 0usize..4) {
        let tr = growth(rate, 0.05, -0.02);
        let y = match side {
            0 => Vec3::new(depth, along, 0.0),
            1 => Vec3::new(1.0 - depth, along, 0.0),
            2 => Vec3::new(along, depth, 0.0),
            _ => Vec3::new(along, 1.0 - depth, 0.0),
        };
        let k = eval_kinematics(&tr, t, &Vec3::new(0.3, 0.7, 0.0), &y).unwrap();
        prop_assert_eq!(k.gradient, thermohom::tensor::Mat3::identity());
        prop_assert_eq!(k.velocity, Vec3::zeros());
    }

    #[test]
    fn pushed_normal_has_unit_length(rate in -0.3..0.3_f64, t in 0.0..1.0_f64, angle in 0.0..std::f64::consts::TAU) {
        let tr = growth(rate, 0.08, -0.05);
        let n0 = Vec3::new(angle.cos(), angle.sin(), 0.0);
        let y = Vec3::new(0.5, 0.5, 0.0) + n0 * 0.25;
        let s = eval_interface(&tr, t, &Vec3::new(0.5, 0.5, 0.0), &y, &n0).unwrap();
        prop_assert!((s.normal.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn coefficients_are_static_at_time_zero(rate in -0.3..0.3_f64, x0 in unit(), x1 in unit(), y0 in unit(), y1 in unit(),
                                            inclusion in any::<bool>()) {
        let cfg = common::standard();
        let p = cfg.problem().unwrap();
        let phase = if inclusion { Phase::B } else { Phase::A };
        let (x, y) = (Vec3::new(x0, x1, 0.0), Vec3::new(y0, y1, 0.0));
        let moving = transformed_coefficients(&growth(rate, 0.0, 0.0), &p.material, phase, 0.0, &x, &y, &p.sources).unwrap();
        let fixed = transformed_coefficients(&Transformation::identity(2), &p.material, phase, 0.0, &x, &y, &p.sources).unwrap();
        prop_assert!((moving.conductivity - fixed.conductivity).amax() <= 1e-12);
        prop_assert!((moving.expansion - fixed.expansion).amax() <= 1e-12);
        prop_assert!((moving.capacity - fixed.capacity).abs() <= 1e-12);
        prop_assert!((moving.jacobian - 1.0).abs() <= 1e-12);
        let c = moving.stiffness.components().iter().zip(fixed.stiffness.components());
        prop_assert!(c.fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) <= 1e-12);
        // the pulled-back conductivity stays SPD
        prop_assert!(moving.conductivity.fixed_view::<2, 2>(0, 0).symmetric_eigenvalues().min() > 0.0);
    }
}

#[test]
fn conductivity_stays_spd_under_growth() {
    let p = common::standard().problem().unwrap();
    let tr = common::sloped_growth();
    for (t, x, y) in common::random_samples(500, 0.5, 5) {
        for phase in [Phase::A, Phase::B] {
            let c = transformed_coefficients(&tr, &p.material, phase, t, &x, &y, &p.sources).unwrap();
            let k = c.conductivity.fixed_view::<2, 2>(0, 0).into_owned();
            assert!((k - k.transpose()).amax() <= 1e-12);
            assert!(k.symmetric_eigenvalues().min() > 0.0, "t {t}, y {y:?}");
        }
    }
}
