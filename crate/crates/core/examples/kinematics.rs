//! Evaluates the radial-growth cell motion and samples its admissibility.

use thermohom::kinematics::{eval_interface, eval_kinematics, validate_admissibility, Amplitude, Transformation};
use thermohom::tensor::Vec3;

fn main() -> thermohom::Result<()> {
    let tr = Transformation::radial_growth(2, 0.25, Amplitude::uniform(0.1), 0.1)?;
    let x = Vec3::new(0.5, 0.5, 0.0);
    for t in [0.0, 0.25, 0.5] {
        let y = Vec3::new(0.6, 0.55, 0.0);
        let k = eval_kinematics(&tr, t, &x, &y)?;
        let n0 = Vec3::new(1.0, 0.0, 0.0);
        let on_interface = Vec3::new(0.75, 0.5, 0.0);
        let i = eval_interface(&tr, t, &x, &on_interface, &n0)?;
        println!(
            "t = {t:.2}: det F = {:.6}, |v| = {:.6}, interface normal velocity = {:.6}, curvature = {:.6}",
            k.jacobian,
            k.velocity.norm(),
            i.normal_velocity,
            i.curvature
        );
    }
    print!("{}", validate_admissibility(&tr, 0.25, 0.5, 32));
    Ok(())
}
