use crate::error::{Error, Result};
use crate::kinematics::tabulated::TabulatedMotion;
use crate::tensor::{projector, Mat3, Vec3};

/// Tolerance for cell-point membership in the closed unit cell.
const CELL_TOL: f64 = 1e-12;

/// Quintic smoothstep cutoff: one up to `inner`, zero from `outer` on,
/// twice continuously differentiable at both knots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    /// Value and first two radial derivatives.
    pub fn eval(&self, rho: f64) -> (f64, f64, f64) {
        if rho <= self.inner {
            return (1.0, 0.0, 0.0);
        }
        if rho >= self.outer {
            return (0.0, 0.0, 0.0);
        }
        let w = self.outer - self.inner;
        let u = (rho - self.inner) / w;
        let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
        (1.0 - s, -ds / w, -dds / (w * w))
    }
}

/// Growth amplitude `g(t, x) = t · (rate + slope · (x − ½))`, zero at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitude {
    pub rate: f64,
    pub slope: Vec3,
}

impl Amplitude {
    pub fn uniform(rate: f64) -> Self {
        Amplitude {
            rate,
            slope: Vec3::zeros(),
        }
    }

    fn local_rate(&self, x: &Vec3) -> f64 {
        self.rate + self.slope.dot(&(x - Vec3::repeat(0.5)))
    }

    pub fn value(&self, t: f64, x: &Vec3) -> f64 {
        t * self.local_rate(x)
    }

    pub fn time_derivative(&self, _t: f64, x: &Vec3) -> f64 {
        self.local_rate(x)
    }
}

/// Radial inflation of the inclusion neighbourhood:
/// `s(t,x,y) = y + g(t,x) η(|y − center|) (y − center)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrowth {
    pub center: Vec3,
    pub amplitude: Amplitude,
    pub cutoff: Cutoff,
}

#[derive(Clone, Debug)]
pub enum Family {
    Identity,
    RadialGrowth(RadialGrowth),
    Tabulated(TabulatedMotion),
}

/// Prescribed cell deformation together with its admissibility metadata.
#[derive(Clone, Debug)]
pub struct Transformation {
    pub family: Family,
    pub dim: usize,
    /// Lower and upper bound required of `det ∇s`.
    pub det_bounds: (f64, f64),
    /// Minimum distance of the deformed interface to the cell boundary.
    pub boundary_margin: f64,
}

/// Deformation gradient, its determinant and the cell velocity at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicSample {
    pub gradient: Mat3,
    pub jacobian: f64,
    pub velocity: Vec3,
}

/// Pushed-forward normal, normal velocity and signed mean curvature at an interface point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceSample {
    pub normal: Vec3,
    pub normal_velocity: f64,
    pub curvature: f64,
}

impl Transformation {
    pub fn identity(dim: usize) -> Self {
        Transformation {
            family: Family::Identity,
            dim,
            det_bounds: (0.5, 2.0),
            boundary_margin: 0.05,
        }
    }

    /// Radial growth around the cell centre with the cutoff derived from the
    /// inclusion radius and the boundary margin: `η = 1` up to the midpoint
    /// between `radius` and the outer knot `½ − margin/2`.
    pub fn radial_growth(dim: usize, radius: f64, amplitude: Amplitude, margin: f64) -> Result<Self> {
        let outer = 0.5 - 0.5 * margin;
        if !(radius > 0.0 && radius < outer) {
            return Err(Error::Transformation(format!(
                "radius {radius} leaves no room for the cutoff below {outer}"
            )));
        }
        let inner = radius + 0.5 * (outer - radius);
        let center = Vec3::new(0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 });
        Ok(Transformation {
            family: Family::RadialGrowth(RadialGrowth {
                center,
                amplitude,
                cutoff: Cutoff { inner, outer },
            }),
            dim,
            det_bounds: (0.5, 2.0),
            boundary_margin: margin,
        })
    }

    /// True when the motion varies with the macroscopic position.
    pub fn depends_on_macro_point(&self) -> bool {
        match &self.family {
            Family::Identity => false,
            Family::RadialGrowth(rg) => rg.amplitude.slope.iter().any(|v| *v != 0.0),
            Family::Tabulated(tab) => tab.points.len() > 1,
        }
    }

    /// True when the motion is the identity for all times.
    pub fn is_static(&self) -> bool {
        match &self.family {
            Family::Identity => true,
            Family::RadialGrowth(rg) => rg.amplitude.rate == 0.0 && rg.amplitude.slope == Vec3::zeros(),
            Family::Tabulated(_) => false,
        }
    }

    fn check_cell_point(&self, y: &Vec3) -> Result<()> {
        for i in 0..self.dim {
            if !(y[i] >= -CELL_TOL && y[i] <= 1.0 + CELL_TOL) {
                return Err(Error::OutsideCell(*y));
            }
        }
        Ok(())
    }

    /// Deformed position `s(t, x, y)`.
    pub fn map(&self, t: f64, x: &Vec3, y: &Vec3) -> Result<Vec3> {
        self.check_cell_point(y)?;
        Ok(match &self.family {
            Family::Identity => *y,
            Family::RadialGrowth(rg) => {
                let q = y - rg.center;
                let (eta, _, _) = rg.cutoff.eval(q.norm());
                y + q * (rg.amplitude.value(t, x) * eta)
            }
            Family::Tabulated(tab) => tab.position(t, x, y),
        })
    }

    /// Analytic deformation gradient, Jacobian and velocity.
    pub fn kinematics(&self, t: f64, x: &Vec3, y: &Vec3) -> Result<KinematicSample> {
        self.check_cell_point(y)?;
        let (gradient, velocity) = match &self.family {
            Family::Identity => (Mat3::identity(), Vec3::zeros()),
            Family::RadialGrowth(rg) => {
                let q = y - rg.center;
                let rho = q.norm();
                let (eta, deta, _) = rg.cutoff.eval(rho);
                let g = rg.amplitude.value(t, x);
                let mut f = Mat3::identity() + projector(self.dim) * (g * eta);
                if rho > 0.0 && deta != 0.0 {
                    f += q * q.transpose() * (g * deta / rho);
                }
                (f, q * (rg.amplitude.time_derivative(t, x) * eta))
            }
            Family::Tabulated(tab) => tab.gradient_and_velocity(t, x, y),
        };
        let jacobian = gradient.determinant();
        if !(jacobian > 0.0) {
            return Err(Error::NonPositiveJacobian { t, y: *y, jacobian });
        }
        Ok(KinematicSample {
            gradient,
            jacobian,
            velocity,
        })
    }

    /// Interface quantities at a reference interface point `y` with reference normal `n0`.
    ///
    /// The normal is the normalized `F^-T n0`. The curvature is `−div(F^-1 n)`
    /// with the normal field extended radially about the inclusion centre; it
    /// is closed-form for the built-in families and a central difference with
    /// step `fd_step` for tabulated ones.
    pub fn interface(&self, t: f64, x: &Vec3, y: &Vec3, n0: &Vec3) -> Result<InterfaceSample> {
        let k = self.kinematics(t, x, y)?;
        let finv_t = inverse(&k.gradient).transpose();
        let pushed = finv_t * n0;
        let len = pushed.norm();
        if !(len >= 1e-12) {
            return Err(Error::DegenerateNormal(len));
        }
        let normal = pushed / len;
        let curvature = match &self.family {
            Family::Identity => -((self.dim - 1) as f64) / (y - self.center()).norm(),
            Family::RadialGrowth(rg) => {
                let rho = (y - rg.center).norm();
                let (eta, deta, ddeta) = rg.cutoff.eval(rho);
                let g = rg.amplitude.value(t, x);
                let dphi = 1.0 + g * (eta + rho * deta);
                let ddphi = g * (2.0 * deta + rho * ddeta);
                -((self.dim - 1) as f64) / (rho * dphi) + ddphi / (dphi * dphi)
            }
            Family::Tabulated(tab) => self.curvature_by_differences(t, x, y, tab.fd_step)?,
        };
        Ok(InterfaceSample {
            normal,
            normal_velocity: k.velocity.dot(&normal),
            curvature,
        })
    }

    /// Centre of the reference inclusion.
    pub fn center(&self) -> Vec3 {
        match &self.family {
            Family::RadialGrowth(rg) => rg.center,
            Family::Tabulated(tab) => tab.center,
            Family::Identity => {
                Vec3::new(0.5, 0.5, if self.dim == 3 { 0.5 } else { 0.0 })
            }
        }
    }

    fn curvature_by_differences(&self, t: f64, x: &Vec3, y: &Vec3, h: f64) -> Result<f64> {
        let c = self.center();
        let field = |p: &Vec3| -> Result<Vec3> {
            let k = self.kinematics(t, x, p)?;
            let finv = inverse(&k.gradient);
            let radial = (p - c).normalize();
            let n = finv.transpose() * radial;
            Ok(finv * (n / n.norm()))
        };
        let mut div = 0.0;
        for i in 0..self.dim {
            let mut e = Vec3::zeros();
            e[i] = h;
            div += (field(&(y + e))?[i] - field(&(y - e))?[i]) / (2.0 * h);
        }
        Ok(-div)
    }
}

/// Inverse of a padded gradient (positive determinant is checked by callers).
pub fn inverse(f: &Mat3) -> Mat3 {
    f.try_inverse().unwrap_or_else(Mat3::zeros)
}
