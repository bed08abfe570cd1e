use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::quadrature::{simplex_rule, Quadrature};
use crate::fem::sparse::CsrMatrix;
use crate::mesh::{InterfaceFacet, SimplexGeometry, SimplexMesh};
use crate::tensor::{Mat3, Tensor4, Vec3};

/// Degrees of freedom per mesh vertex: one for scalar fields, `dim` for
/// vector fields (dof `vertex · dim + component`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Scalar,
    Vector,
}

impl Layout {
    pub fn block(self, dim: usize) -> usize {
        match self {
            Layout::Scalar => 1,
            Layout::Vector => dim,
        }
    }
}

/// P1 assembler over a subset of the simplices of a mesh. Coefficient
/// closures receive a flat quadrature index `k · n_qp + q`, where `k` is the
/// position of the simplex in [`Assembler::cells`].
pub struct Assembler<'m> {
    pub mesh: &'m SimplexMesh,
    pub cells: Vec<usize>,
    pub quadrature: Quadrature,
    geometry: Vec<SimplexGeometry>,
}

struct Local {
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m SimplexMesh) -> Self {
        Self::on_cells(mesh, (0..mesh.n_cells()).collect())
    }

    pub fn on_cells(mesh: &'m SimplexMesh, cells: Vec<usize>) -> Self {
        let geometry = cells.iter().map(|&c| mesh.geometry(c)).collect();
        Assembler {
            mesh,
            cells,
            quadrature: simplex_rule(mesh.dim),
            geometry,
        }
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn n_qp(&self) -> usize {
        self.quadrature.len()
    }

    pub fn n_points(&self) -> usize {
        self.cells.len() * self.n_qp()
    }

    pub fn geometry(&self, k: usize) -> &SimplexGeometry {
        &self.geometry[k]
    }

    pub fn n_dofs(&self, layout: Layout) -> usize {
        self.mesh.n_vertices() * layout.block(self.dim())
    }

    /// Physical coordinates of every quadrature point, flat-indexed.
    pub fn points(&self) -> Vec<Vec3> {
        let nq = self.n_qp();
        let mut out = Vec::with_capacity(self.n_points());
        for &c in &self.cells {
            let v = self.mesh.cell(c);
            for q in 0..nq {
                let lam = &self.quadrature.points[q];
                out.push(v.iter().enumerate().map(|(i, &vi)| self.mesh.vertices[vi] * lam[i]).sum());
            }
        }
        out
    }

    /// Quadrature weight (including the simplex measure) of every point.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_points());
        for g in &self.geometry {
            for w in &self.quadrature.weights {
                out.push(w * g.volume);
            }
        }
        out
    }

    fn dofs(&self, c: usize, layout: Layout) -> Vec<usize> {
        let b = layout.block(self.dim());
        self.mesh.cell(c).iter().flat_map(|&v| (0..b).map(move |a| v * b + a)).collect()
    }

    /// Sparsity pattern coupling every pair of vertices sharing a simplex.
    fn pattern(&self, rows: Layout, cols: Layout) -> CsrMatrix {
        let dim = self.dim();
        let (rb, cb) = (rows.block(dim), cols.block(dim));
        let nv = self.mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for &c in &self.cells {
            let v = self.mesh.cell(c);
            for &a in v {
                adj[a].extend_from_slice(v);
            }
        }
        adj.par_iter_mut().for_each(|l| {
            l.sort_unstable();
            l.dedup();
        });
        let mut row_ptr = Vec::with_capacity(nv * rb + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for l in &adj {
            for _ in 0..rb {
                for &w in l {
                    for b in 0..cb {
                        col_idx.push(w * cb + b);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let nnz = col_idx.len();
        CsrMatrix {
            nrows: nv * rb,
            ncols: nv * cb,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Computes local matrices in parallel and adds them in simplex order.
    fn assemble<F>(&self, rows: Layout, cols: Layout, local: F) -> Result<CsrMatrix>
    where
        F: Fn(usize, &SimplexGeometry) -> Vec<f64> + Sync,
    {
        let mut m = self.pattern(rows, cols);
        let locals: Vec<Local> = (0..self.cells.len())
            .into_par_iter()
            .map(|k| {
                let c = self.cells[k];
                Local {
                    rows: self.dofs(c, rows),
                    cols: self.dofs(c, cols),
                    values: local(k, &self.geometry[k]),
                }
            })
            .collect();
        for (k, l) in locals.iter().enumerate() {
            let nc = l.cols.len();
            for (i, &r) in l.rows.iter().enumerate() {
                for (j, &c) in l.cols.iter().enumerate() {
                    let v = l.values[i * nc + j];
                    if !v.is_finite() {
                        return Err(Error::Assembly(format!(
                            "non-finite entry in simplex {}",
                            self.cells[k]
                        )));
                    }
                    let pos = m.position(r, c).expect("pattern covers every simplex");
                    m.values[pos] += v;
                }
            }
        }
        Ok(m)
    }

    /// `∫ K ∇φ_j · ∇φ_i`.
    pub fn diffusion(&self, coef: impl Fn(usize) -> Mat3 + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let n = self.dim() + 1;
        let w = &self.quadrature.weights;
        self.assemble(Layout::Scalar, Layout::Scalar, |k, g| {
            let mut kbar = Mat3::zeros();
            for q in 0..nq {
                kbar += coef(k * nq + q) * w[q];
            }
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                let kg = kbar * g.gradients[i];
                for j in 0..n {
                    out[j * n + i] = g.volume * kg.dot(&g.gradients[j]);
                }
            }
            out
        })
    }

    /// `∫ c φ_j φ_i`.
    pub fn mass(&self, coef: impl Fn(usize) -> f64 + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let n = self.dim() + 1;
        let quad = &self.quadrature;
        self.assemble(Layout::Scalar, Layout::Scalar, |k, g| {
            let mut out = vec![0.0; n * n];
            for q in 0..nq {
                let s = quad.weights[q] * g.volume * coef(k * nq + q);
                let lam = &quad.points[q];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] += s * lam[i] * lam[j];
                    }
                }
            }
            out
        })
    }

    /// `∫ C e(φ_j) : e(φ_i)` for vector fields.
    pub fn elasticity(&self, coef: impl Fn(usize) -> Tensor4 + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let dim = self.dim();
        let n = dim + 1;
        let w = &self.quadrature.weights;
        self.assemble(Layout::Vector, Layout::Vector, |k, g| {
            let mut cbar = Tensor4::zeros();
            for q in 0..nq {
                cbar.add_scaled(&coef(k * nq + q), w[q]);
            }
            let m = n * dim;
            let mut out = vec![0.0; m * m];
            for i in 0..n {
                let gi = &g.gradients[i];
                for j in 0..n {
                    let gj = &g.gradients[j];
                    for a in 0..dim {
                        for b in 0..dim {
                            let mut v = 0.0;
                            for kk in 0..dim {
                                for l in 0..dim {
                                    v += cbar.get(a, kk, b, l) * gi[kk] * gj[l];
                                }
                            }
                            out[(i * dim + a) * m + j * dim + b] = g.volume * v;
                        }
                    }
                }
            }
            out
        })
    }

    /// Thermal-stress coupling `⟨Gθ, v⟩ = ∫ θ A : ∇v`; rows are vector dofs,
    /// columns scalar dofs.
    pub fn coupling(&self, coef: impl Fn(usize) -> Mat3 + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let dim = self.dim();
        let n = dim + 1;
        let quad = &self.quadrature;
        self.assemble(Layout::Vector, Layout::Scalar, |k, g| {
            let mut out = vec![0.0; n * dim * n];
            for q in 0..nq {
                let s = quad.weights[q] * g.volume;
                let a = coef(k * nq + q);
                let lam = &quad.points[q];
                for i in 0..n {
                    let ag = a * g.gradients[i];
                    for c in 0..dim {
                        for j in 0..n {
                            out[(i * dim + c) * n + j] += s * lam[j] * ag[c];
                        }
                    }
                }
            }
            out
        })
    }

    /// Transport term `∫ φ_j (b · ∇φ_i)` with the transporting field `b`
    /// (already multiplied by the capacity); row `i` is the test function.
    pub fn advection(&self, coef: impl Fn(usize) -> Vec3 + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let n = self.dim() + 1;
        let quad = &self.quadrature;
        self.assemble(Layout::Scalar, Layout::Scalar, |k, g| {
            let mut out = vec![0.0; n * n];
            for q in 0..nq {
                let s = quad.weights[q] * g.volume;
                let b = coef(k * nq + q);
                let lam = &quad.points[q];
                for i in 0..n {
                    let bg = b.dot(&g.gradients[i]);
                    for j in 0..n {
                        out[i * n + j] += s * lam[j] * bg;
                    }
                }
            }
            out
        })
    }

    /// Transport of the dissipation `∫ (A : ∇v_j)(b · ∇φ_i)`; rows scalar,
    /// columns vector dofs. The closure returns `(b, A)`.
    pub fn dissipation_advection(&self, coef: impl Fn(usize) -> (Vec3, Mat3) + Sync) -> Result<CsrMatrix> {
        let nq = self.n_qp();
        let dim = self.dim();
        let n = dim + 1;
        let w = &self.quadrature.weights;
        self.assemble(Layout::Scalar, Layout::Vector, |k, g| {
            let mut out = vec![0.0; n * n * dim];
            for q in 0..nq {
                let s = w[q] * g.volume;
                let (b, a) = coef(k * nq + q);
                for i in 0..n {
                    let bg = b.dot(&g.gradients[i]);
                    for j in 0..n {
                        let ag = a * g.gradients[j];
                        for c in 0..dim {
                            out[i * n * dim + j * dim + c] += s * bg * ag[c];
                        }
                    }
                }
            }
            out
        })
    }

    /// `∫ f φ_i`.
    pub fn scalar_load(&self, f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
        let nq = self.n_qp();
        let quad = &self.quadrature;
        self.load(Layout::Scalar, |k, g, out| {
            for q in 0..nq {
                let s = quad.weights[q] * g.volume * f(k * nq + q);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += s * quad.points[q][i];
                }
            }
        })
    }

    /// `∫ f · φ_i e_a`.
    pub fn vector_load(&self, f: impl Fn(usize) -> Vec3 + Sync) -> Vec<f64> {
        let nq = self.n_qp();
        let dim = self.dim();
        let quad = &self.quadrature;
        self.load(Layout::Vector, |k, g, out| {
            for q in 0..nq {
                let s = quad.weights[q] * g.volume;
                let v = f(k * nq + q);
                for i in 0..=dim {
                    for a in 0..dim {
                        out[i * dim + a] += s * quad.points[q][i] * v[a];
                    }
                }
            }
        })
    }

    /// `∫ σ : ∇(φ_i e_a)`.
    pub fn stress_load(&self, f: impl Fn(usize) -> Mat3 + Sync) -> Vec<f64> {
        let nq = self.n_qp();
        let dim = self.dim();
        let w = &self.quadrature.weights;
        self.load(Layout::Vector, |k, g, out| {
            let mut sbar = Mat3::zeros();
            for q in 0..nq {
                sbar += f(k * nq + q) * w[q];
            }
            for i in 0..=dim {
                let sg = sbar * g.gradients[i];
                for a in 0..dim {
                    out[i * dim + a] += g.volume * sg[a];
                }
            }
        })
    }

    /// `∫ q · ∇φ_i`.
    pub fn flux_load(&self, f: impl Fn(usize) -> Vec3 + Sync) -> Vec<f64> {
        let nq = self.n_qp();
        let w = &self.quadrature.weights;
        self.load(Layout::Scalar, |k, g, out| {
            let mut qbar = Vec3::zeros();
            for q in 0..nq {
                qbar += f(k * nq + q) * w[q];
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += g.volume * qbar.dot(&g.gradients[i]);
            }
        })
    }

    fn load<F>(&self, layout: Layout, local: F) -> Vec<f64>
    where
        F: Fn(usize, &SimplexGeometry, &mut [f64]) + Sync,
    {
        let size = (self.dim() + 1) * layout.block(self.dim());
        let locals: Vec<Vec<f64>> = (0..self.cells.len())
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; size];
                local(k, &self.geometry[k], &mut out);
                out
            })
            .collect();
        let mut b = vec![0.0; self.n_dofs(layout)];
        for (k, l) in locals.iter().enumerate() {
            for (d, v) in self.dofs(self.cells[k], layout).into_iter().zip(l) {
                b[d] += v;
            }
        }
        b
    }

    /// Nodal values of a P1 field at every quadrature point.
    pub fn interpolate(&self, nodal: &[f64]) -> Vec<f64> {
        let nq = self.n_qp();
        let mut out = Vec::with_capacity(self.n_points());
        for &c in &self.cells {
            let v = self.mesh.cell(c);
            for q in 0..nq {
                out.push(v.iter().enumerate().map(|(i, &vi)| nodal[vi] * self.quadrature.points[q][i]).sum());
            }
        }
        out
    }

    /// Gradient of a scalar P1 field on simplex `k`.
    pub fn scalar_gradient(&self, k: usize, nodal: &[f64]) -> Vec3 {
        let g = &self.geometry[k];
        self.mesh.cell(self.cells[k]).iter().enumerate().map(|(i, &v)| g.gradients[i] * nodal[v]).sum()
    }

    /// Gradient `(∇u)_ab = ∂_b u_a` of a vector P1 field on simplex `k`.
    pub fn vector_gradient(&self, k: usize, nodal: &[f64]) -> Mat3 {
        let dim = self.dim();
        let g = &self.geometry[k];
        let mut m = Mat3::zeros();
        for (i, &v) in self.mesh.cell(self.cells[k]).iter().enumerate() {
            for a in 0..dim {
                m += nodal[v * dim + a] * Vec3::ith(a, 1.0) * g.gradients[i].transpose();
            }
        }
        m
    }
}

/// `∫_Γ f φ_i ds` with the centroid rule on every facet.
pub fn interface_scalar_load(
    mesh: &SimplexMesh,
    facets: &[InterfaceFacet],
    f: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    if facets.is_empty() {
        return Err(Error::Assembly("no interface facets".into()));
    }
    let dim = mesh.dim;
    let mut b = vec![0.0; mesh.n_vertices()];
    for (k, fc) in facets.iter().enumerate() {
        let s = fc.measure * f(k) / dim as f64;
        for &v in &fc.vertices[..dim] {
            b[v] += s;
        }
    }
    Ok(b)
}

/// `∫_Γ g · φ_i e_a ds` with the centroid rule on every facet.
pub fn interface_vector_load(
    mesh: &SimplexMesh,
    facets: &[InterfaceFacet],
    g: impl Fn(usize) -> Vec3,
) -> Result<Vec<f64>> {
    if facets.is_empty() {
        return Err(Error::Assembly("no interface facets".into()));
    }
    let dim = mesh.dim;
    let mut b = vec![0.0; mesh.n_vertices() * dim];
    for (k, fc) in facets.iter().enumerate() {
        let val = g(k) * (fc.measure / dim as f64);
        for &v in &fc.vertices[..dim] {
            for a in 0..dim {
                b[v * dim + a] += val[a];
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Phase;
    use crate::mesh::{build_cell_mesh, structured_mesh};

    #[test]
    fn reference_triangle_stiffness() {
        let m = SimplexMesh::new(2, vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![0, 1, 2], vec![Phase::A]).unwrap();
        let a = Assembler::new(&m).diffusion(|_| Mat3::identity()).unwrap();
        let hand = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - hand[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_constant_kernel() {
        let (m, _) = structured_mesh(6, 2).unwrap();
        let asm = Assembler::new(&m);
        let mass = asm.mass(|_| 1.0).unwrap();
        assert!((mass.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let k = asm.diffusion(|_| Mat3::identity()).unwrap();
        assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(k.symmetry_defect() < 1e-14);
    }

    #[test]
    fn rigid_motions_in_elastic_kernel() {
        let (m, _) = structured_mesh(4, 3).unwrap();
        let asm = Assembler::new(&m);
        let c = Tensor4::isotropic(1.0, 1.0, 3);
        let e = asm.elasticity(|_| c).unwrap();
        let n = m.n_vertices();
        let mut rot = vec![0.0; 3 * n];
        for (v, p) in m.vertices.iter().enumerate() {
            rot[3 * v] = -p[1];
            rot[3 * v + 1] = p[0];
        }
        assert!(e.matvec(&rot).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn interface_loads() {
        let cm = build_cell_mesh(0.25, 16, 2).unwrap();
        let b = interface_scalar_load(&cm.mesh, &cm.interface, |_| 1.0).unwrap();
        let l = b.iter().sum::<f64>();
        let exact = std::f64::consts::TAU * 0.25;
        assert!((l - exact).abs() / exact < 5e-3);
        let v = interface_vector_load(&cm.mesh, &cm.interface, |k| cm.interface[k].normal * 2.0).unwrap();
        let sx: f64 = v.iter().step_by(2).sum();
        let sy: f64 = v.iter().skip(1).step_by(2).sum();
        assert!(sx.abs() < 1e-10 && sy.abs() < 1e-10);
    }
}
