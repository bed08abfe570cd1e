mod common;

use thermohom::effective::{check_invariants, effective_coefficients};
use thermohom::reference::solve_epsilon_problem;
use thermohom::tensor::Vec3;
use thermohom::twoscale::{run_simulation, TwoScaleSolver};

fn coarse_3d() -> thermohom::RunConfig {
    let mut cfg = common::standard();
    cfg.geometry.dimension = 3;
    cfg.geometry.cell_resolution = 4;
    cfg.initial.modes = vec![1, 0, 0];
    cfg.time.t_end = 0.1;
    cfg.macro_.resolution = 2;
    cfg.macro_.micro_decimation = true;
    cfg
}

#[test]
fn effective_coefficients_keep_their_structure_in_3d() {
    let p = coarse_3d().problem().unwrap();
    let s = effective_coefficients(&p.cell, &p.transformation, &p.material, &p.sources, 0.1,
                                   &Vec3::new(0.5, 0.5, 0.5), &p.coupling.effective()).unwrap();
    let r = check_invariants(&s.effective, 1e-10);
    assert!(r.passed(), "{:?}", r.violations);
}

#[test]
fn coupled_solvers_run_in_3d() {
    let cfg = coarse_3d();
    let p = cfg.problem().unwrap();
    let out = run_simulation(&TwoScaleSolver::new(p.clone(), cfg.two_scale_options()).unwrap(), None).unwrap();
    assert_eq!(out.diagnostics.records.len(), 3);
    let eps = solve_epsilon_problem(&p, 0.5).unwrap();
    assert!(eps.records.iter().all(|r| r.theta_l2.is_finite()));
}
