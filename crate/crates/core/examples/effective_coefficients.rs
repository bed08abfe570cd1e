//! Tracks the effective conductivity, stiffness and heat capacity while the
//! inclusion grows.

use thermohom::config::RunConfig;
use thermohom::effective::effective_coefficients;
use thermohom::tensor::Vec3;

fn main() -> thermohom::Result<()> {
    let cfg = RunConfig::default();
    let p = cfg.problem()?;
    let opts = p.coupling.effective();
    let x = Vec3::new(0.5, 0.5, 0.0);
    println!("t      |Y_B|     K_eff_11   C_eff_1111  c_eff      latent");
    for i in 0..=5 {
        let t = 0.1 * i as f64;
        let s = effective_coefficients(&p.cell, &p.transformation, &p.material, &p.sources, t, &x, &opts)?;
        let e = &s.effective;
        println!(
            "{t:.2}   {:.6}  {:.6}   {:.6}    {:.6}   {:.6}",
            e.inclusion_measure,
            e.conductivity[(0, 0)],
            e.stiffness.get(0, 0, 0, 0),
            e.capacity,
            e.latent_source
        );
    }
    Ok(())
}
