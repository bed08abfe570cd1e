//! Acceptance suite: one line per criterion, then a summary.
//!
//! Criteria listed in `EXPECTED_FAILURES` are known not to hold with the
//! shipped discretization; they are still run and reported as FAIL, and the
//! target only errors when the set of failures differs from that list.

mod common;

use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use thermohom::config::RunConfig;
use thermohom::effective::{check_invariants, csv_row, effective_coefficients};
use thermohom::kinematics::{eval_kinematics, transformed_coefficients, Phase, Transformation};
use thermohom::reference::{apriori_norm_bundle, compare_solutions, operator_structure_checks, solve_epsilon_problem};
use thermohom::tensor::{Tensor4, Vec3};
use thermohom::twoscale::{run_simulation, TwoScaleSolver};

/// Refined-mesh oracle for the self-convergence criterion: standard
/// configuration at `t = 0`, macro point `(½, ½)`, cell resolution 64,
/// computed with this crate (`effective_coefficients`, CG tolerance 1e-10)
/// before this test was written and frozen here. Resolution 128 gives
/// 0.671740053015108862 and 1.79329503170192606, so the oracle itself is
/// within 0.2% of the mesh limit.
const ORACLE_N64_K11: f64 = 0.672_076_846_614_613_421;
const ORACLE_N64_C1111: f64 = 1.795_440_092_197_549_52;

/// Criteria that fail for a documented reason (see the README).
const EXPECTED_FAILURES: &[usize] = &[4];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn kinematics_oracle() -> Verdict {
    let tr = common::sloped_growth();
    let mut worst = 0.0_f64;
    let samples = common::random_samples(1000, 0.5, 11);
    for (t, x, y) in &samples {
        let k = eval_kinematics(&tr, *t, x, y).expect("admissible sample");
        let fd = common::fd_gradient(&tr, *t, x, y, 1e-5);
        worst = worst.max((k.gradient - fd).norm() / k.gradient.norm());
    }
    verdict(worst < 1e-6, format!("max relative error {worst:.3e} over {} samples (< 1e-6)", samples.len()))
}

fn tensor_gap(a: &Tensor4, b: &Tensor4) -> f64 {
    a.components().iter().zip(b.components()).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()))
}

fn freeze_at_zero() -> Verdict {
    let cfg = common::standard();
    let p = cfg.problem().unwrap();
    let identity = Transformation::identity(2);
    let sources = &p.sources;
    let mut worst = 0.0_f64;
    for (_, x, y) in common::random_samples(200, 0.0, 12) {
        for phase in [Phase::A, Phase::B] {
            let moving = transformed_coefficients(&p.transformation, &p.material, phase, 0.0, &x, &y, sources).unwrap();
            let fixed = transformed_coefficients(&identity, &p.material, phase, 0.0, &x, &y, sources).unwrap();
            let diffs = [
                moving.jacobian - fixed.jacobian,
                moving.capacity - fixed.capacity,
                (moving.conductivity - fixed.conductivity).amax(),
                (moving.expansion - fixed.expansion).amax(),
                (moving.dissipation - fixed.dissipation).amax(),
                (moving.force - fixed.force).amax(),
                moving.heat_source - fixed.heat_source,
                tensor_gap(&moving.stiffness, &fixed.stiffness),
                tensor_gap(&moving.symmetrizer, &fixed.symmetrizer),
            ];
            worst = diffs.iter().fold(worst, |m, d| m.max(d.abs()));
        }
    }
    // effective values at t = 0 against the static cell; the latent source
    // is a velocity term and is left out
    let x = Vec3::new(0.5, 0.5, 0.0);
    let opts = p.coupling.effective();
    let moving = effective_coefficients(&p.cell, &p.transformation, &p.material, &p.sources, 0.0, &x, &opts).unwrap();
    let fixed = effective_coefficients(&p.cell, &identity, &p.material, &p.sources, 0.0, &x, &opts).unwrap();
    let (mut a, mut b) = (moving.effective.clone(), fixed.effective.clone());
    a.latent_source = 0.0;
    b.latent_source = 0.0;
    let eff = csv_row(&a).iter().zip(csv_row(&b)).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
    verdict(
        worst <= 1e-10 && eff <= 1e-10,
        format!("max deviation {worst:.3e} (pointwise), {eff:.3e} (effective); limit 1e-10"),
    )
}

fn effective_structure() -> Verdict {
    let cfg = common::standard();
    let p = cfg.problem().unwrap();
    let mut failures = Vec::new();
    let mut bound = f64::NEG_INFINITY;
    for t in [0.0, 0.25, 0.5] {
        let s = effective_coefficients(&p.cell, &p.transformation, &p.material, &p.sources, t, &Vec3::new(0.5, 0.5, 0.0), &p.coupling.effective())
            .unwrap();
        let r = check_invariants(&s.effective, 1e-10);
        bound = bound.max(r.bound_excess);
        failures.extend(r.violations);
    }
    verdict(
        failures.is_empty(),
        format!(
            "symmetry, definiteness and bound at n = 16; largest bound excess {bound:.3e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn self_convergence() -> Verdict {
    let cfg = common::standard();
    assert_eq!(cfg.geometry.cell_resolution, 16);
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
    let k = s.effective.conductivity[(0, 0)];
    let c = s.effective.stiffness.get(0, 0, 0, 0);
    let (ek, ec) = ((k / ORACLE_N64_K11 - 1.0).abs(), (c / ORACLE_N64_C1111 - 1.0).abs());
    verdict(
        ek < 0.01 && ec < 0.01,
        format!("K_eff_11 off by {:.2}%, C_eff_1111 off by {:.2}% (limit 1%)", 100.0 * ek, 100.0 * ec),
    )
}

fn fem_verification() -> Verdict {
    let ns = [8, 16, 32, 64];
    let scalar: Vec<f64> = ns.iter().map(|&n| common::poisson_error(n)).collect();
    let elastic: Vec<f64> = ns.iter().map(|&n| common::elasticity_error(n)).collect();
    let (os, oe) = (common::orders(&scalar), common::orders(&elastic));
    let ok = os.iter().chain(&oe).all(|o| (o - 2.0).abs() <= 0.2);
    let fmt = |o: &[f64]| o.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ");
    verdict(ok, format!("orders diffusion [{}], elasticity [{}] (2.0 ± 0.2)", fmt(&os), fmt(&oe)))
}

fn operator_structure() -> Verdict {
    let cfg = common::standard();
    let p = cfg.problem().unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for eps in [0.5, 0.25] {
        let r = operator_structure_checks(&p, eps, &cfg.check_times()).unwrap();
        ok &= r.passed();
        let asym = r.samples.iter().map(|s| s.dissipation_asymmetry).fold(0.0, f64::max);
        let rayleigh = r.samples.iter().map(|s| s.elastic_min_rayleigh).fold(f64::INFINITY, f64::min);
        lines.push(format!("eps {eps}: B2 asymmetry {asym:.1e}, min E Rayleigh {rayleigh:.3}"));
        lines.extend(r.failures());
    }
    verdict(ok, lines.join("; "))
}

fn epsilon_uniformity() -> Verdict {
    let p = common::standard().problem().unwrap();
    let coarse = apriori_norm_bundle(&solve_epsilon_problem(&p, 0.5).unwrap()).unwrap().entries();
    let fine = apriori_norm_bundle(&solve_epsilon_problem(&p, 0.125).unwrap()).unwrap().entries();
    let worst = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| if *c > 0.0 { f / c } else if *f <= 1e-8 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let ok = coarse.iter().zip(&fine).all(|(c, f)| *f <= 1.5 * c + 1e-8);
    verdict(ok, format!("largest ratio bundle(1/8) / bundle(1/2) = {worst:.3} (limit 1.5)"))
}

fn two_scale_convergence() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, cfg) in [("decoupled", common::decoupled()), ("coupled", common::standard())] {
        let p = cfg.problem().unwrap();
        let sols: Vec<_> = [0.5, 0.25, 0.125].iter().map(|&e| solve_epsilon_problem(&p, e).unwrap()).collect();
        let table = compare_solutions(&p, &sols, cfg.two_scale_options()).unwrap();
        ok &= table.matrix_error_decreasing();
        let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.matrix_error)).collect();
        parts.push(format!("{name} [{}]", errs.join(", ")));
    }
    verdict(ok, format!("matrix-phase errors over eps 1/2, 1/4, 1/8: {}", parts.join(", ")))
}

fn conservation() -> Verdict {
    let mut cfg = common::standard();
    cfg.transformation.family = thermohom::config::FamilyName::Identity;
    cfg.matrix.dissipation = 0.0;
    cfg.inclusion.dissipation = 0.0;
    cfg.time.t_end = 1.0;
    cfg.time.dt = 0.01;
    let p = cfg.problem().unwrap();
    assert!(p.sources.is_zero());
    let solver = TwoScaleSolver::new(p, cfg.two_scale_options()).unwrap();
    let out = run_simulation(&solver, None).unwrap();
    let steps = out.diagnostics.records.len() - 1;
    let drift = out.diagnostics.max_content_drift();
    verdict(
        steps == 100 && drift < 1e-10,
        format!("largest relative heat-content change per step {drift:.3e} over {steps} steps (< 1e-10)"),
    )
}

fn run_cli(cfg_path: &Path, sub: &str, workers: usize, out: &Path) -> bool {
    Process::new(env!("CARGO_BIN_EXE_thermohom"))
        .arg(sub)
        .arg("--config")
        .arg(cfg_path)
        .arg("--workers")
        .arg(workers.to_string())
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    let text = "[geometry]\ncell_resolution = 8\n[time]\nt_end = 0.1\n[macro]\nresolution = 4\n[reference]\neps = [0.5, 0.25]\ncheck_eps = [0.5]\n";
    std::fs::write(&cfg_path, text).unwrap();
    RunConfig::from_toml(text, dir.path()).unwrap();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for sub in ["cell", "effective", "macro", "micro", "compare", "checks"] {
        let (a, b) = (dir.path().join(format!("{sub}-1")), dir.path().join(format!("{sub}-3")));
        if !(run_cli(&cfg_path, sub, 1, &a) && run_cli(&cfg_path, sub, 3, &b)) {
            mismatches.push(format!("{sub}: run failed"));
            continue;
        }
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).ok());
            compared += 1;
            if Some(x) != y {
                mismatches.push(format!("{sub}/{}", name.to_string_lossy()));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{compared} artifacts of 6 subcommands compared between 1 and 3 workers{}",
            if mismatches.is_empty() { String::new() } else { format!("; differing: {}", mismatches.join(", ")) }
        ),
    )
}

fn main() {
    type Criterion = (usize, &'static str, Option<Duration>, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        (1, "kinematics finite-difference oracle", Some(Duration::from_secs(10)), kinematics_oracle),
        (2, "identity at t = 0", None, freeze_at_zero),
        (3, "effective tensor structure", Some(Duration::from_secs(60)), effective_structure),
        (4, "self-convergence against n = 64", None, self_convergence),
        (5, "manufactured-solution orders", Some(Duration::from_secs(120)), fem_verification),
        (6, "operator structure", Some(Duration::from_secs(120)), operator_structure),
        (7, "eps-uniform a priori bounds", Some(Duration::from_secs(600)), epsilon_uniformity),
        (8, "two-scale convergence", Some(Duration::from_secs(900)), two_scale_convergence),
        (9, "heat-content conservation", None, conservation),
        (10, "determinism across worker counts", None, determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let passed = v.passed && limit.map_or(true, |l| took <= l);
        if !passed {
            failed.push(id);
        }
        println!(
            "criterion {id:2} {} {name}: {} ({:.1} s{})",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()))
        );
    }
    println!(
        "acceptance: {} of 10 passed; failed {:?}, expected failures {:?}",
        10 - failed.len(),
        failed,
        EXPECTED_FAILURES
    );
    if failed != EXPECTED_FAILURES {
        eprintln!("acceptance: the set of failing criteria differs from the documented one");
        std::process::exit(1);
    }
}
