use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermohom::fem::Assembler;
use thermohom::mesh::build_cell_mesh;
use thermohom::tensor::{Mat3, Tensor4};

fn random_spd(rng: &mut ChaCha8Rng) -> Mat3 {
    let mut a = Mat3::zeros();
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let mut k = a * a.transpose();
    k[(0, 0)] += 0.1;
    k[(1, 1)] += 0.1;
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn diffusion_is_symmetric_and_kills_constants(seed in any::<u64>(), n in prop::sample::select(vec![6usize, 8, 12])) {
        let cell = build_cell_mesh(0.25, n, 2).unwrap();
        let asm = Assembler::new(&cell.mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<Mat3> = (0..asm.n_points()).map(|_| random_spd(&mut rng)).collect();
        let a = asm.diffusion(|k| coef[k]).unwrap();
        prop_assert!(a.symmetry_defect() <= 1e-12 * a.max_abs());
        let ones = vec![1.0; cell.mesh.n_vertices()];
        prop_assert!(a.matvec(&ones).iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn elasticity_is_symmetric_and_kills_rigid_motions(seed in any::<u64>(), n in prop::sample::select(vec![6usize, 8, 12])) {
        let cell = build_cell_mesh(0.25, n, 2).unwrap();
        let asm = Assembler::new(&cell.mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<Tensor4> = (0..asm.n_points())
            .map(|_| Tensor4::isotropic(rng.gen_range(0.0..3.0), rng.gen_range(0.2..3.0), 2))
            .collect();
        let a = asm.elasticity(|k| coef[k]).unwrap();
        prop_assert!(a.symmetry_defect() <= 1e-12 * a.max_abs());
        let nv = cell.mesh.n_vertices();
        let motions: [Box<dyn Fn(usize, usize) -> f64>; 3] = [
            Box::new(|_, c| if c == 0 { 1.0 } else { 0.0 }),
            Box::new(|_, c| if c == 1 { 1.0 } else { 0.0 }),
            Box::new(|v, c| {
                let p = cell.mesh.vertices[v];
                if c == 0 { -p[1] } else { p[0] }
            }),
        ];
        for m in &motions {
            let u: Vec<f64> = (0..2 * nv).map(|i| m(i / 2, i % 2)).collect();
            prop_assert!(a.matvec(&u).iter().all(|r| r.abs() < 1e-10));
        }
    }

    #[test]
    fn mass_matrix_integrates_constants(seed in any::<u64>()) {
        let cell = build_cell_mesh(0.2, 8, 2).unwrap();
        let asm = Assembler::new(&cell.mesh);
        let c = ChaCha8Rng::seed_from_u64(seed).gen_range(0.1..5.0);
        let m = asm.mass(|_| c).unwrap();
        let ones = vec![1.0; cell.mesh.n_vertices()];
        let total: f64 = m.matvec(&ones).iter().sum();
        prop_assert!((total - c).abs() <= 1e-12 * c);
        prop_assert!(m.symmetry_defect() <= 1e-14 * m.max_abs());
    }
}
