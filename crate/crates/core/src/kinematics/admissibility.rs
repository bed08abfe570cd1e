use std::fmt;

use crate::error::Error;
use crate::kinematics::transform::{inverse, Transformation};
use crate::tensor::Vec3;

/// Sampled check of the transformation assumptions.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub min_jacobian: f64,
    pub min_jacobian_at: (f64, Vec3, Vec3),
    pub max_jacobian: f64,
    /// Smallest distance from the deformed interface to the cell boundary.
    pub min_interface_distance: f64,
    /// Largest `|s(t,x,y) − y|` over samples in the boundary strip.
    pub boundary_strip_motion: f64,
    pub max_gradient_norm: f64,
    pub max_inverse_gradient_norm: f64,
    pub max_velocity: f64,
    pub max_normal_velocity: f64,
    pub max_curvature: f64,
    pub violations: Vec<String>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples                  {}", self.samples)?;
        writeln!(f, "det F range              [{:.6e}, {:.6e}]", self.min_jacobian, self.max_jacobian)?;
        writeln!(f, "interface-boundary gap   {:.6e}", self.min_interface_distance)?;
        writeln!(f, "boundary strip motion    {:.6e}", self.boundary_strip_motion)?;
        writeln!(
            f,
            "sup |F|, |F^-1|, |v|     {:.6e}, {:.6e}, {:.6e}",
            self.max_gradient_norm, self.max_inverse_gradient_norm, self.max_velocity
        )?;
        writeln!(f, "sup |W|, |H| on interface {:.6e}, {:.6e}", self.max_normal_velocity, self.max_curvature)?;
        if self.violations.is_empty() {
            writeln!(f, "admissibility: pass")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            writeln!(f, "admissibility: FAIL")
        }
    }
}

fn lattice(dim: usize, n: usize) -> Vec<Vec3> {
    let count = (n + 1).pow(dim as u32);
    (0..count)
        .map(|mut idx| {
            let mut y = Vec3::zeros();
            for a in (0..dim).rev() {
                y[a] = (idx % (n + 1)) as f64 / n as f64;
                idx /= n + 1;
            }
            y
        })
        .collect()
}

/// Points on the reference sphere/circle of `radius` around `center`.
fn interface_samples(dim: usize, center: &Vec3, radius: f64, n: usize) -> Vec<(Vec3, Vec3)> {
    let mut out = Vec::new();
    let tau = std::f64::consts::TAU;
    if dim == 2 {
        for i in 0..4 * n {
            let a = tau * i as f64 / (4 * n) as f64;
            let nrm = Vec3::new(a.cos(), a.sin(), 0.0);
            out.push((center + nrm * radius, nrm));
        }
    } else {
        for i in 0..=n {
            let th = std::f64::consts::PI * i as f64 / n as f64;
            for j in 0..2 * n {
                let ph = tau * j as f64 / (2 * n) as f64;
                let nrm = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                out.push((center + nrm * radius, nrm));
            }
        }
    }
    out
}

/// Samples the transformation on a `grid`-per-axis lattice of the cell, the
/// time interval `[0, t_end]` and a small set of macroscopic points, and checks
/// the determinant bounds, the interface-to-boundary margin and the
/// fixed-boundary condition. Violations are reported, never raised.
pub fn validate_admissibility(tr: &Transformation, radius: f64, t_end: f64, grid: usize) -> AdmissibilityReport {
    let dim = tr.dim;
    let grid = grid.max(1);
    let nt = if t_end > 0.0 { grid } else { 0 };
    let times: Vec<f64> = (0..=nt).map(|i| if nt == 0 { 0.0 } else { t_end * i as f64 / nt as f64 }).collect();
    let macro_points = if tr.depends_on_macro_point() {
        lattice(dim, 2)
    } else {
        vec![Vec3::new(0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 })]
    };
    let cell_points = lattice(dim, grid);
    let iface = interface_samples(dim, &tr.center(), radius, grid);
    let (lo, hi) = tr.det_bounds;
    let margin = tr.boundary_margin;

    let mut rep = AdmissibilityReport {
        samples: 0,
        min_jacobian: f64::INFINITY,
        min_jacobian_at: (0.0, Vec3::zeros(), Vec3::zeros()),
        max_jacobian: f64::NEG_INFINITY,
        min_interface_distance: f64::INFINITY,
        boundary_strip_motion: 0.0,
        max_gradient_norm: 0.0,
        max_inverse_gradient_norm: 0.0,
        max_velocity: 0.0,
        max_normal_velocity: 0.0,
        max_curvature: 0.0,
        violations: Vec::new(),
    };
    let mut first_bad_det: Option<String> = None;

    for &t in &times {
        for x in &macro_points {
            for y in &cell_points {
                rep.samples += 1;
                let jac = match tr.kinematics(t, x, y) {
                    Ok(k) => {
                        rep.max_gradient_norm = rep.max_gradient_norm.max(k.gradient.norm());
                        rep.max_inverse_gradient_norm =
                            rep.max_inverse_gradient_norm.max(inverse(&k.gradient).norm());
                        rep.max_velocity = rep.max_velocity.max(k.velocity.norm());
                        k.jacobian
                    }
                    Err(Error::NonPositiveJacobian { jacobian, .. }) => jacobian,
                    Err(e) => {
                        rep.violations.push(format!("evaluation failed at t={t}, y={:?}: {e}", y.as_slice()));
                        continue;
                    }
                };
                if jac < rep.min_jacobian {
                    rep.min_jacobian = jac;
                    rep.min_jacobian_at = (t, *x, *y);
                }
                rep.max_jacobian = rep.max_jacobian.max(jac);
                if (jac < lo || jac > hi) && first_bad_det.is_none() {
                    first_bad_det = Some(format!(
                        "det F = {jac:.6e} outside [{lo}, {hi}] at t = {t}, x = {:?}, y = {:?}",
                        &x.as_slice()[..dim],
                        &y.as_slice()[..dim]
                    ));
                }
                let strip = (0..dim).map(|a| y[a].min(1.0 - y[a])).fold(f64::INFINITY, f64::min);
                if strip < 0.5 * margin {
                    if let Ok(s) = tr.map(t, x, y) {
                        rep.boundary_strip_motion = rep.boundary_strip_motion.max((s - y).norm());
                    }
                }
            }
            for (y, n0) in &iface {
                let Ok(s) = tr.map(t, x, y) else { continue };
                let gap = (0..dim).map(|a| s[a].min(1.0 - s[a])).fold(f64::INFINITY, f64::min);
                rep.min_interface_distance = rep.min_interface_distance.min(gap);
                if let Ok(i) = tr.interface(t, x, y, n0) {
                    rep.max_normal_velocity = rep.max_normal_velocity.max(i.normal_velocity.abs());
                    rep.max_curvature = rep.max_curvature.max(i.curvature.abs());
                }
            }
        }
    }
    if let Some(msg) = first_bad_det {
        rep.violations.push(msg);
    }
    if rep.min_jacobian <= 0.0 {
        let (t, x, y) = rep.min_jacobian_at;
        rep.violations.push(format!(
            "det F <= 0 ({:.6e}) at t = {t}, x = {:?}, y = {:?}",
            rep.min_jacobian,
            &x.as_slice()[..dim],
            &y.as_slice()[..dim]
        ));
    }
    if !(rep.min_interface_distance > margin) {
        rep.violations.push(format!(
            "deformed interface comes within {:.6e} of the cell boundary (margin {margin})",
            rep.min_interface_distance
        ));
    }
    if rep.boundary_strip_motion > 0.0 {
        rep.violations.push(format!(
            "cell points within {} of the boundary move by up to {:.6e}",
            0.5 * margin,
            rep.boundary_strip_motion
        ));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::transform::Amplitude;

    #[test]
    fn identity_passes_with_unit_jacobian() {
        let rep = validate_admissibility(&Transformation::identity(2), 0.25, 1.0, 8);
        assert!(rep.passed(), "{rep}");
        assert_eq!((rep.min_jacobian, rep.max_jacobian), (1.0, 1.0));
    }

    #[test]
    fn mild_growth_passes_and_collapse_fails() {
        let ok = Transformation::radial_growth(2, 0.25, Amplitude::uniform(0.1), 0.1).unwrap();
        assert!(validate_admissibility(&ok, 0.25, 0.5, 16).passed());
        let bad = Transformation::radial_growth(2, 0.25, Amplitude::uniform(-1.0), 0.1).unwrap();
        let rep = validate_admissibility(&bad, 0.25, 1.0, 16);
        assert!(!rep.passed());
        assert!(rep.min_jacobian <= 0.0);
        assert!(rep.violations.iter().any(|v| v.contains("det F <= 0")));
    }
}
