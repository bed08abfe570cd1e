use rayon::prelude::*;

use crate::error::Result;
use crate::fem::{Assembler, ConstraintSet, Layout};
use crate::kinematics::{
    interface_coefficients, transformed_coefficients, InterfaceCoefficients, MaterialParams, Phase, Sources,
    TransformedCoefficients, Transformation,
};
use crate::mesh::{CellMesh, SimplexMesh};
use crate::tensor::Vec3;

/// One phase of the cell as a stand-alone mesh.
#[derive(Clone, Debug)]
pub struct PhaseDomain {
    pub phase: Phase,
    pub mesh: SimplexMesh,
    /// Cell-mesh vertex of every local vertex.
    pub parent_vertex: Vec<usize>,
    /// Cell-mesh simplex of every local simplex.
    pub parent_cell: Vec<usize>,
    /// Quadrature points and weights (flat, see [`Assembler`]).
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl PhaseDomain {
    fn new(cell: &CellMesh, phase: Phase) -> Self {
        let (mesh, parent_vertex, parent_cell) = cell.mesh.submesh(phase);
        let asm = Assembler::new(&mesh);
        let points = asm.points();
        let weights = asm.weights();
        PhaseDomain {
            phase,
            mesh,
            parent_vertex,
            parent_cell,
            points,
            weights,
        }
    }

    pub fn assembler(&self) -> Assembler<'_> {
        Assembler::new(&self.mesh)
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.n_cells() == 0
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// `∫ φ_i` for every local vertex.
    pub fn lumped_mass(&self) -> Vec<f64> {
        self.assembler().scalar_load(|_| 1.0)
    }
}

/// The reference cell split into its phases.
#[derive(Clone, Debug)]
pub struct CellDomain {
    pub cell: CellMesh,
    pub matrix: PhaseDomain,
    pub inclusion: PhaseDomain,
    /// Quadrature point of every interface facet, on the analytic interface
    /// when the inclusion is a built-in circle or sphere.
    pub facet_points: Vec<Vec3>,
    /// Local inclusion-mesh index of every cell-mesh vertex (`usize::MAX` outside).
    pub inclusion_index: Vec<usize>,
}

/// Pulled-back coefficients at every quadrature point of the cell.
#[derive(Clone, Debug)]
pub struct CellCoefficients {
    pub t: f64,
    pub x: Vec3,
    pub matrix: Vec<TransformedCoefficients>,
    pub inclusion: Vec<TransformedCoefficients>,
    pub interface: Vec<InterfaceCoefficients>,
}

impl CellDomain {
    pub fn new(cell: CellMesh) -> Self {
        let matrix = PhaseDomain::new(&cell, Phase::A);
        let inclusion = PhaseDomain::new(&cell, Phase::B);
        let facet_points = cell
            .interface
            .iter()
            .map(|f| {
                let c = f.centroid(&cell.mesh);
                let d = c - cell.center;
                if cell.radius > 0.0 && d.norm() > 0.0 {
                    cell.center + d * (cell.radius / d.norm())
                } else {
                    c
                }
            })
            .collect();
        let mut inclusion_index = vec![usize::MAX; cell.mesh.n_vertices()];
        for (l, &p) in inclusion.parent_vertex.iter().enumerate() {
            inclusion_index[p] = l;
        }
        CellDomain {
            cell,
            matrix,
            inclusion,
            facet_points,
            inclusion_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn phase(&self, phase: Phase) -> &PhaseDomain {
        match phase {
            Phase::A => &self.matrix,
            Phase::B => &self.inclusion,
        }
    }

    /// Coefficients at `(t, x)` on all quadrature points and interface facets.
    pub fn coefficients(
        &self,
        tr: &Transformation,
        mat: &MaterialParams,
        sources: &Sources,
        t: f64,
        x: &Vec3,
    ) -> Result<CellCoefficients> {
        let eval = |pd: &PhaseDomain| -> Result<Vec<TransformedCoefficients>> {
            pd.points
                .par_iter()
                .map(|y| transformed_coefficients(tr, mat, pd.phase, t, x, y, sources))
                .collect()
        };
        let interface = self
            .cell
            .interface
            .par_iter()
            .zip(self.facet_points.par_iter())
            .map(|(f, y)| interface_coefficients(tr, mat, t, x, y, &f.normal))
            .collect::<Result<Vec<_>>>()?;
        Ok(CellCoefficients {
            t,
            x: *x,
            matrix: eval(&self.matrix)?,
            inclusion: eval(&self.inclusion)?,
            interface,
        })
    }

    /// Periodic identifications and zero-mean conditions on the matrix phase.
    pub fn matrix_constraints(&self, layout: Layout) -> Result<ConstraintSet> {
        let pd = &self.matrix;
        let dim = self.dim();
        let b = layout.block(dim);
        let leaders = self.cell.periodic_leaders();
        let mut local = vec![usize::MAX; self.cell.mesh.n_vertices()];
        for (l, &p) in pd.parent_vertex.iter().enumerate() {
            local[p] = l;
        }
        let mut cs = ConstraintSet::new(pd.mesh.n_vertices() * b);
        for (l, &p) in pd.parent_vertex.iter().enumerate() {
            let lead = local[leaders[p]];
            if lead != l && lead != usize::MAX {
                for a in 0..b {
                    cs.identify(l * b + a, lead * b + a)?;
                }
            }
        }
        let lumped = pd.lumped_mass();
        for a in 0..b {
            let mut w = vec![0.0; pd.mesh.n_vertices() * b];
            for (v, m) in lumped.iter().enumerate() {
                w[v * b + a] = *m;
            }
            cs.mean(w, 0.0)?;
        }
        Ok(cs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cell_mesh;

    #[test]
    fn phases_partition_the_cell() {
        let d = CellDomain::new(build_cell_mesh(0.25, 8, 2).unwrap());
        let wa: f64 = d.matrix.weights.iter().sum();
        let wb: f64 = d.inclusion.weights.iter().sum();
        assert!((wa + wb - 1.0).abs() < 1e-12);
        for p in &d.facet_points {
            assert!(((p - d.cell.center).norm() - 0.25).abs() < 1e-14);
        }
    }
}
