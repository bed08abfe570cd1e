//! Checks symmetry and definiteness of the discrete elasticity and
//! dissipation operators on the ε-geometry.

use thermohom::config::RunConfig;
use thermohom::reference::operator_structure_checks;

fn main() -> thermohom::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.geometry.cell_resolution = 8;
    let p = cfg.problem()?;
    for eps in [0.5, 0.25] {
        print!("{}", operator_structure_checks(&p, eps, &[0.0, 0.25, 0.5])?.to_text());
    }
    Ok(())
}
