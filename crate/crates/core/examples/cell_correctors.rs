//! Solves the periodic cell problems of a static cell and prints corrector
//! statistics.

use thermohom::cell::{solve_correctors, CellDomain};
use thermohom::fem::SolverOptions;
use thermohom::kinematics::{MaterialParams, PhaseMaterial, Sources, Transformation};
use thermohom::mesh::build_cell_mesh;
use thermohom::tensor::Vec3;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn main() -> thermohom::Result<()> {
    let domain = CellDomain::new(build_cell_mesh(0.25, 16, 2)?);
    let mut a = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
    a.expansion = 0.2;
    let mat = MaterialParams::new(2, a, PhaseMaterial::isotropic(2, 2.0, 2.0, 0.5), 0.0, 0.0)?;
    let coeffs = domain.coefficients(&Transformation::identity(2), &mat, &Sources::zero(), 0.0, &Vec3::zeros())?;
    let corr = solve_correctors(&domain, &coeffs, &SolverOptions::default())?;
    for (j, t) in corr.thermal.iter().enumerate() {
        println!("thermal corrector {}: max |τ| = {:.6e}", j + 1, max_abs(t));
    }
    for ((j, k), t) in corr.pairs.iter().zip(&corr.elastic) {
        println!("elastic corrector {}{}: max |τ| = {:.6e}", j + 1, k + 1, max_abs(t));
    }
    println!("thermal-stress corrector: max |τ| = {:.6e}", max_abs(&corr.thermal_stress));
    println!("total solver iterations {}", corr.iterations);
    Ok(())
}
