mod common;

use thermohom::reference::{korn_constant, solve_epsilon_problem, trace_constant, trace_ratio, EpsilonSolver};

const EPS: [f64; 3] = [0.5, 0.25, 0.125];

#[test]
fn korn_constants_stay_within_a_factor_three() {
    let p = common::standard().problem().unwrap();
    let k: Vec<f64> = EPS
        .iter()
        .map(|&eps| korn_constant(&EpsilonSolver::new(p.clone(), eps).unwrap()).unwrap())
        .collect();
    let (lo, hi) = k.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!(lo > 0.0 && hi / lo <= 3.0, "{k:?}");
}

#[test]
fn trace_constant_from_the_coarsest_tiling_holds_on_finer_ones() {
    let p = common::standard().problem().unwrap();
    let coarse = EpsilonSolver::new(p.clone(), 0.5).unwrap();
    let c = trace_constant(&coarse.mesh, 0.5).unwrap();
    for eps in EPS {
        let ratio = trace_ratio(&solve_epsilon_problem(&p, eps).unwrap()).unwrap();
        assert!(ratio <= c, "eps {eps}: ratio {ratio} above {c}");
    }
}
