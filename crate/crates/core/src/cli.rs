//! Subcommand dispatch and artifact writing for the `thermohom` binary.
//!
//! Every subcommand writes its artifacts into the output directory together
//! with `<subcommand>.manifest.toml` (configuration hash, crate version,
//! tolerances and a SHA-256 per artifact) and the fully defaulted
//! configuration echo `config.echo.toml`. Nothing written depends on the
//! worker count or on the wall clock.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cell::{solve_correctors, Quantizer, SampleCache};
use crate::config::RunConfig;
use crate::effective::{tabulate_effective, CellContext, EffectiveTable};
use crate::error::{Error, Result};
use crate::kinematics::validate_admissibility;
use crate::mesh::{mesh_quality, Field};
use crate::problem::Problem;
use crate::reference::{
    apriori_norm_bundle, compare_solutions, operator_structure_checks, solve_epsilon_problem, trace_ratio,
    EpsilonSolution, NormBundle,
};
use crate::tensor::Vec3;
use crate::twoscale::{run_simulation, TwoScaleSolver};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Cell,
    Effective,
    Macro,
    Micro,
    Compare,
    Checks,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Cell,
        Command::Effective,
        Command::Macro,
        Command::Micro,
        Command::Compare,
        Command::Checks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Cell => "cell",
            Command::Effective => "effective",
            Command::Macro => "macro",
            Command::Micro => "micro",
            Command::Compare => "compare",
            Command::Checks => "checks",
        }
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// Written files, relative to the output directory, manifest last.
    pub artifacts: Vec<PathBuf>,
    /// False when a check reported a violation.
    pub passed: bool,
    /// Short human-readable result.
    pub summary: String,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<(PathBuf, String)>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, content: String) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, &content).map_err(|e| Error::io(&path, e))?;
        let digest: String = Sha256::digest(content.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        self.files.push((PathBuf::from(name), digest));
        Ok(())
    }
}

fn manifest(cmd: Command, cfg: &RunConfig, files: &[(PathBuf, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "subcommand = \"{}\"", cmd.name());
    let _ = writeln!(s, "crate = \"{} {}\"", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "config_sha256 = \"{}\"", cfg.hash());
    let _ = writeln!(s, "\n[tolerances]");
    let _ = writeln!(s, "cg_tol = {:e}", cfg.solver.cg_tol);
    let _ = writeln!(s, "cg_max_iter = {}", cfg.solver.cg_max_iter);
    let _ = writeln!(s, "fixed_point_tol = {:e}", cfg.solver.fixed_point_tol);
    let _ = writeln!(s, "fixed_point_max_iter = {}", cfg.solver.fixed_point_max_iter);
    let _ = writeln!(s, "effective_check_tol = {:e}", cfg.effective.check_tol);
    let _ = writeln!(s, "\n[artifacts]");
    for (name, digest) in files {
        let _ = writeln!(s, "\"{}\" = \"{digest}\"", name.display());
    }
    s
}

/// Runs one subcommand on a validated configuration and writes its
/// artifacts into `out`.
pub fn dispatch(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let problem = cfg.problem()?;
    let mut w = Writer {
        dir: out,
        files: Vec::new(),
    };
    w.write("config.echo.toml", cfg.to_toml())?;
    let (passed, summary) = match cmd {
        Command::Cell => run_cell(cfg, &problem, &mut w)?,
        Command::Effective => run_effective(cfg, &problem, &mut w)?,
        Command::Macro => run_macro(cfg, &problem, &mut w)?,
        Command::Micro => run_micro(cfg, &problem, &mut w)?,
        Command::Compare => run_compare(cfg, &problem, &mut w)?,
        Command::Checks => run_checks(cfg, &problem, &mut w)?,
    };
    let name = format!("{}.manifest.toml", cmd.name());
    let text = manifest(cmd, cfg, &w.files);
    let path = out.join(&name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let mut artifacts: Vec<PathBuf> = w.files.into_iter().map(|(p, _)| p).collect();
    artifacts.push(PathBuf::from(name));
    Ok(Outcome {
        artifacts,
        passed,
        summary,
    })
}

/// Cache that keeps requested samples apart up to round-off.
fn fine_cache<V>(problem: &Problem) -> SampleCache<V> {
    let q = problem.quantizer(1e-9);
    SampleCache::new(Quantizer {
        time_step: if q.time_step > 0.0 { 1e-9 } else { 0.0 },
        space_step: q.space_step,
    })
}

fn effective_table(problem: &Problem, times: &[f64], points: &[Vec3], tol: f64) -> Result<EffectiveTable> {
    let ctx = CellContext {
        domain: &problem.cell,
        transformation: &problem.transformation,
        material: &problem.material,
        sources: &problem.sources,
        options: problem.coupling.effective(),
    };
    tabulate_effective(&ctx, &fine_cache(problem), times, points, tol)
}

fn vectors(nodal: &[f64], dim: usize) -> Vec<Vec3> {
    nodal
        .chunks(dim)
        .map(|c| {
            let mut v = Vec3::zeros();
            v.as_mut_slice()[..dim].copy_from_slice(c);
            v
        })
        .collect()
}

fn run_cell(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let dim = problem.dim();
    let (t, x) = (cfg.cell.time, cfg.cell_point());
    let domain = &problem.cell;
    let coeffs = domain.coefficients(&problem.transformation, &problem.material, &problem.sources, t, &x)?;
    let corr = solve_correctors(domain, &coeffs, &problem.coupling.solver)?;
    let names: Vec<(String, Vec<Vec3>)> = corr
        .pairs
        .iter()
        .zip(&corr.elastic)
        .map(|((j, k), v)| (format!("elastic_corrector_{}{}", j + 1, k + 1), vectors(v, dim)))
        .chain(std::iter::once(("thermal_stress_corrector".to_string(), vectors(&corr.thermal_stress, dim))))
        .collect();
    let thermal_names: Vec<String> = (0..dim).map(|j| format!("thermal_corrector_{}", j + 1)).collect();
    let mut fields: Vec<Field> = thermal_names
        .iter()
        .zip(&corr.thermal)
        .map(|(n, v)| Field::Scalar(n, v))
        .collect();
    fields.extend(names.iter().map(|(n, v)| Field::Vector(n, v)));
    w.write("cell_correctors.vtk", crate::mesh::vtk_string(&domain.matrix.mesh, &fields, &[]))?;
    let table = effective_table(problem, &[t], &[x], cfg.effective.check_tol)?;
    w.write("cell_effective.csv", table.to_csv())?;
    let passed = table.reports.iter().all(|r| r.passed());
    Ok((
        passed,
        format!(
            "cell problem at t = {t}: {} matrix vertices, {} solver iterations",
            domain.matrix.mesh.n_vertices(),
            corr.iterations
        ),
    ))
}

fn run_effective(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let times = cfg.effective_times();
    let points = cfg.effective_points();
    let table = effective_table(problem, &times, &points, cfg.effective.check_tol)?;
    w.write("effective.csv", table.to_csv())?;
    let mut report = String::new();
    for (row, r) in table.rows.iter().zip(&table.reports) {
        let _ = writeln!(
            report,
            "t = {:.16e}, x = {:?}: {}",
            row.t,
            &row.x.as_slice()[..problem.dim()],
            if r.passed() { "pass".to_string() } else { r.violations.join("; ") }
        );
    }
    let passed = table.reports.iter().all(|r| r.passed());
    w.write("effective_checks.txt", report)?;
    Ok((passed, format!("{} effective samples, invariants {}", table.rows.len(), pass_word(passed))))
}

fn run_macro(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let solver = TwoScaleSolver::new(problem.clone(), cfg.two_scale_options())?;
    let every = match cfg.macro_.snapshot_every {
        0 => problem.n_steps().max(1),
        k => k,
    };
    let out = run_simulation(&solver, Some(every))?;
    w.write("macro_diagnostics.csv", out.diagnostics.to_csv())?;
    let dim = problem.dim();
    for (step, _, theta, u) in &out.snapshots {
        let disp = vectors(u, dim);
        let fields = [Field::Scalar("theta", theta), Field::Vector("displacement", &disp)];
        w.write(&format!("macro_step_{step:05}.vtk"), crate::mesh::vtk_string(&solver.mesh.mesh, &fields, &[]))?;
    }
    let last = out.diagnostics.records.last().expect("initial record");
    Ok((
        true,
        format!(
            "{} steps on {} macro vertices, {} micro sites; final heat content {:.16e}",
            problem.n_steps(),
            solver.mesh.mesh.n_vertices(),
            solver.sites.len(),
            last.heat_content
        ),
    ))
}

fn eps_tag(eps: f64) -> String {
    format!("eps_1_{}", (1.0 / eps).round() as usize)
}

fn solve_all(problem: &Problem, eps: &[f64]) -> Result<Vec<EpsilonSolution>> {
    eps.par_iter().map(|&e| solve_epsilon_problem(problem, e)).collect()
}

/// Norm bundle and trace ratio per ε as CSV.
pub fn norms_csv(rows: &[(f64, NormBundle, f64)]) -> String {
    let mut s = format!("eps,{},trace_ratio\n", NormBundle::NAMES.join(","));
    for (eps, b, trace) in rows {
        let vals: Vec<String> = b.entries().iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "{eps:.16e},{},{trace:.16e}", vals.join(","));
    }
    s
}

fn run_micro(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let solutions = solve_all(problem, &cfg.reference.eps)?;
    let dim = problem.dim();
    let mut rows = Vec::new();
    for sol in &solutions {
        let tag = eps_tag(sol.eps);
        w.write(&format!("micro_{tag}.csv"), sol.records_csv())?;
        let theta = sol.theta.last().expect("initial state");
        let disp = vectors(sol.displacement.last().expect("initial state"), dim);
        let fields = [Field::Scalar("theta", theta), Field::Vector("displacement", &disp)];
        w.write(&format!("micro_{tag}.vtk"), crate::mesh::vtk_string(&sol.mesh.mesh, &fields, &[]))?;
        rows.push((sol.eps, apriori_norm_bundle(sol)?, trace_ratio(sol)?));
    }
    w.write("micro_norms.csv", norms_csv(&rows))?;
    Ok((true, format!("{} ε-resolved runs", solutions.len())))
}

fn run_compare(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let solutions = solve_all(problem, &cfg.reference.eps)?;
    let table = compare_solutions(problem, &solutions, cfg.two_scale_options())?;
    w.write("compare.csv", table.to_csv())?;
    let decreasing = table.matrix_error_decreasing();
    Ok((
        decreasing,
        format!(
            "{} rows; matrix-phase error strictly decreasing: {}",
            table.rows.len(),
            if decreasing { "yes" } else { "no" }
        ),
    ))
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_checks(cfg: &RunConfig, problem: &Problem, w: &mut Writer) -> Result<(bool, String)> {
    let mut report = String::new();
    let quality = mesh_quality(&problem.cell.cell.mesh);
    let _ = writeln!(report, "== cell mesh\n{quality}");
    let adm = validate_admissibility(
        &problem.transformation,
        cfg.geometry.radius,
        problem.t_end,
        cfg.transformation.admissibility_grid,
    );
    let _ = writeln!(report, "== transformation\n{adm}");
    let times = cfg.check_times();
    let structure: Vec<_> = cfg
        .reference
        .check_eps
        .par_iter()
        .map(|&e| operator_structure_checks(problem, e, &times))
        .collect::<Result<_>>()?;
    let mut passed = quality.passed() && adm.passed();
    for s in &structure {
        let _ = writeln!(report, "== operators\n{}", s.to_text());
        passed &= s.passed();
    }
    let _ = writeln!(report, "overall: {}", pass_word(passed));
    w.write("checks.txt", report)?;
    Ok((passed, format!("checks: {}", pass_word(passed))))
}
