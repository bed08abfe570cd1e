use std::f64::consts::PI;

use proptest::prelude::*;
use thermohom::kinematics::Phase;
use thermohom::mesh::{build_cell_mesh, build_epsilon_mesh};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phases_fill_the_cell(radius in 0.1..0.35_f64, n in prop::sample::select(vec![8usize, 12, 16, 24])) {
        let cell = build_cell_mesh(radius, n, 2).unwrap();
        let (a, b) = (cell.mesh.phase_measure(Phase::A), cell.mesh.phase_measure(Phase::B));
        prop_assert!((a + b - 1.0).abs() <= 1e-10);
        prop_assert!(b > 0.0 && a > 0.0);
    }

    #[test]
    fn interface_normals_point_into_the_matrix(radius in 0.1..0.35_f64, n in prop::sample::select(vec![8usize, 16])) {
        let cell = build_cell_mesh(radius, n, 2).unwrap();
        for f in &cell.interface {
            prop_assert_eq!(cell.mesh.phases[f.inclusion_cell], Phase::B);
            prop_assert_eq!(cell.mesh.phases[f.matrix_cell], Phase::A);
            let c = f.centroid(&cell.mesh);
            prop_assert!((cell.mesh.centroid(f.matrix_cell) - c).dot(&f.normal) > 0.0);
            prop_assert!((cell.mesh.centroid(f.inclusion_cell) - c).dot(&f.normal) < 0.0);
            prop_assert!((f.normal.norm() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn interface_length_converges_at_second_order() {
    let r = 0.25;
    let errors: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| (build_cell_mesh(r, n, 2).unwrap().interface_measure() - 2.0 * PI * r).abs())
        .collect();
    for w in errors.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate >= 1.9, "rate {rate} from {errors:?}");
    }
}

#[test]
fn tiled_domain_counts_and_separation() {
    let cell = build_cell_mesh(0.25, 8, 2).unwrap();
    for (eps, tiles) in [(0.5, 2usize), (0.25, 4), (0.125, 8)] {
        let m = build_epsilon_mesh(&cell, eps).unwrap();
        assert_eq!(m.mesh.n_cells(), tiles * tiles * cell.mesh.n_cells());
        assert_eq!(m.inclusion_components(), tiles * tiles);
        assert!(m.boundary_touches_only_matrix());
        let volume = m.mesh.phase_measure(Phase::A) + m.mesh.phase_measure(Phase::B);
        assert!((volume - 1.0).abs() <= 1e-10);
    }
}
