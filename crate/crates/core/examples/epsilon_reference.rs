//! Solves the problem on the ε-periodic geometry for three cell sizes and
//! prints the norms that stay bounded as ε shrinks.

use thermohom::config::RunConfig;
use thermohom::reference::{apriori_norm_bundle, solve_epsilon_problem, trace_ratio, NormBundle};

fn main() -> thermohom::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.geometry.cell_resolution = 8;
    let p = cfg.problem()?;
    println!("eps     vertices  {}  trace_ratio", NormBundle::NAMES.join("  "));
    for eps in [0.5, 0.25, 0.125] {
        let sol = solve_epsilon_problem(&p, eps)?;
        let b = apriori_norm_bundle(&sol)?;
        let vals: Vec<String> = b.entries().iter().map(|v| format!("{v:.5e}")).collect();
        println!(
            "{eps:<6}  {:8}  {}  {:.5}",
            sol.mesh.mesh.n_vertices(),
            vals.join("  "),
            trace_ratio(&sol)?
        );
    }
    Ok(())
}
