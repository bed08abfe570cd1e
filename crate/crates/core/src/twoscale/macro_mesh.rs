use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::mesh::{structured_mesh, SimplexMesh};
use crate::tensor::Vec3;

/// Structured simplicial mesh of the macroscopic unit square/cube.
#[derive(Clone, Debug)]
pub struct MacroMesh {
    pub mesh: SimplexMesh,
    /// Intervals per axis.
    pub n: usize,
    pub boundary_vertex: Vec<bool>,
}

/// Point at which one micro problem is posed, standing for the quadrature
/// weight `weight` of simplex `element`.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroSite {
    pub point: Vec3,
    pub element: usize,
    pub weight: f64,
    /// Barycentric coordinates of `point` in `element`.
    pub barycentric: [f64; 4],
    /// Flat macro quadrature indices represented by this site.
    pub quadrature_points: Vec<usize>,
}

impl MacroMesh {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Mesh("macro resolution must be positive".into()));
        }
        let (mesh, lattice) = structured_mesh(n, dim)?;
        let boundary_vertex = lattice.iter().map(|ijk| (0..dim).any(|a| ijk[a] == 0 || ijk[a] == n)).collect();
        Ok(MacroMesh {
            mesh,
            n,
            boundary_vertex,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Simplices per lattice cube.
    fn per_cube(&self) -> usize {
        if self.dim() == 2 {
            2
        } else {
            6
        }
    }

    /// Barycentric coordinates of `x` in simplex `c`.
    pub fn barycentric(&self, c: usize, x: &Vec3) -> [f64; 4] {
        let g = self.mesh.geometry(c);
        let v = self.mesh.cell(c);
        let p0 = self.mesh.vertices[v[0]];
        let mut lam = [0.0; 4];
        let mut rest = 1.0;
        for i in 1..v.len() {
            lam[i] = g.gradients[i].dot(&(x - p0));
            rest -= lam[i];
        }
        lam[0] = rest;
        lam
    }

    /// Simplex containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, x: &Vec3) -> (usize, [f64; 4]) {
        let dim = self.dim();
        let mut cube = 0;
        for a in 0..dim {
            let i = ((x[a] * self.n as f64).floor() as isize).clamp(0, self.n as isize - 1) as usize;
            cube = cube * self.n + i;
        }
        let k = self.per_cube();
        let mut best = (cube * k, [0.0; 4], f64::NEG_INFINITY);
        for c in cube * k..(cube + 1) * k {
            let lam = self.barycentric(c, x);
            let worst = lam[..=dim].iter().cloned().fold(f64::INFINITY, f64::min);
            if worst > best.2 {
                best = (c, lam, worst);
            }
            if worst >= -1e-12 {
                break;
            }
        }
        (best.0, best.1)
    }

    /// P1 interpolation of a nodal scalar field at `x`.
    pub fn interpolate(&self, nodal: &[f64], x: &Vec3) -> f64 {
        let (c, lam) = self.locate(x);
        self.mesh.cell(c).iter().zip(lam).map(|(&v, l)| nodal[v] * l).sum()
    }

    /// One site per quadrature point, or one per simplex at its centroid.
    pub fn micro_sites(&self, per_element: bool) -> Vec<MicroSite> {
        let asm = Assembler::new(&self.mesh);
        let nq = asm.n_qp();
        let points = asm.points();
        let weights = asm.weights();
        let dim = self.dim();
        let mut sites = Vec::new();
        for c in 0..self.mesh.n_cells() {
            if per_element {
                let mut lam = [0.0; 4];
                lam[..=dim].iter_mut().for_each(|l| *l = 1.0 / (dim + 1) as f64);
                sites.push(MicroSite {
                    point: self.mesh.centroid(c),
                    element: c,
                    weight: (0..nq).map(|q| weights[c * nq + q]).sum(),
                    barycentric: lam,
                    quadrature_points: (c * nq..(c + 1) * nq).collect(),
                });
            } else {
                for q in 0..nq {
                    let mut lam = [0.0; 4];
                    lam[..=dim].copy_from_slice(&asm.quadrature.points[q][..=dim]);
                    sites.push(MicroSite {
                        point: points[c * nq + q],
                        element: c,
                        weight: weights[c * nq + q],
                        barycentric: lam,
                        quadrature_points: vec![c * nq + q],
                    });
                }
            }
        }
        sites
    }

    /// Value of a nodal field at a site.
    pub fn site_value(&self, site: &MicroSite, nodal: &[f64]) -> f64 {
        self.mesh.cell(site.element).iter().zip(site.barycentric).map(|(&v, l)| nodal[v] * l).sum()
    }

    /// Adds `scale · λ_site` to the entries of `b` at the site's vertices.
    pub fn scatter_site(&self, site: &MicroSite, scale: f64, b: &mut [f64]) {
        for (&v, l) in self.mesh.cell(site.element).iter().zip(site.barycentric) {
            b[v] += scale * l;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_and_interpolate_linear_fields() {
        for dim in [2, 3] {
            let m = MacroMesh::new(3, dim).unwrap();
            let f = |p: &Vec3| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2];
            let nodal: Vec<f64> = m.mesh.vertices.iter().map(f).collect();
            for x in [Vec3::new(0.1, 0.7, 0.3), Vec3::new(0.999, 0.0, 0.5), Vec3::new(0.5, 0.5, 0.5)] {
                let mut x = x;
                if dim == 2 {
                    x[2] = 0.0;
                }
                assert!((m.interpolate(&nodal, &x) - f(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn site_weights_cover_the_domain() {
        let m = MacroMesh::new(4, 2).unwrap();
        for per_element in [false, true] {
            let s = m.micro_sites(per_element);
            assert!((s.iter().map(|s| s.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.boundary_vertex.iter().filter(|b| **b).count(), 16);
    }
}
