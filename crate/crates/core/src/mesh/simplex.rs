use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kinematics::Phase;
use crate::tensor::{Mat3, Vec3};

/// Conforming simplicial mesh with one phase label per simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexMesh {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    /// Flat connectivity, `dim + 1` vertex indices per simplex.
    connectivity: Vec<usize>,
    pub phases: Vec<Phase>,
}

/// Barycentric gradients and measure of one simplex.
#[derive(Clone, Copy, Debug)]
pub struct SimplexGeometry {
    pub volume: f64,
    pub gradients: [Vec3; 4],
}

impl SimplexMesh {
    pub fn new(dim: usize, vertices: Vec<Vec3>, connectivity: Vec<usize>, phases: Vec<Phase>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Mesh(format!("dimension {dim} is not 2 or 3")));
        }
        if connectivity.len() != phases.len() * (dim + 1) {
            return Err(Error::Mesh("connectivity and phase counts disagree".into()));
        }
        if let Some(&bad) = connectivity.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::Mesh(format!("vertex index {bad} out of range")));
        }
        Ok(SimplexMesh {
            dim,
            vertices,
            connectivity,
            phases,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.phases.len()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.dim + 1
    }

    #[inline]
    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.connectivity[c * k..(c + 1) * k]
    }

    pub fn connectivity(&self) -> &[usize] {
        &self.connectivity
    }

    /// Edge matrix with columns `p_i − p_0`, padded with the unit third axis in 2-D.
    fn edge_matrix(&self, c: usize) -> Mat3 {
        let v = self.cell(c);
        let p0 = self.vertices[v[0]];
        let mut m = Mat3::identity();
        for i in 0..self.dim {
            let e = self.vertices[v[i + 1]] - p0;
            for r in 0..3 {
                m[(r, i)] = e[r];
            }
        }
        m
    }

    pub fn signed_volume(&self, c: usize) -> f64 {
        let det = self.edge_matrix(c).determinant();
        if self.dim == 2 {
            det / 2.0
        } else {
            det / 6.0
        }
    }

    pub fn geometry(&self, c: usize) -> SimplexGeometry {
        let m = self.edge_matrix(c);
        let vol = self.signed_volume(c).abs();
        let inv = m.try_inverse().unwrap_or_else(Mat3::zeros);
        let mut g = [Vec3::zeros(); 4];
        let mut sum = Vec3::zeros();
        for i in 0..self.dim {
            let row = Vec3::new(inv[(i, 0)], inv[(i, 1)], if self.dim == 3 { inv[(i, 2)] } else { 0.0 });
            g[i + 1] = row;
            sum += row;
        }
        g[0] = -sum;
        SimplexGeometry { volume: vol, gradients: g }
    }

    pub fn centroid(&self, c: usize) -> Vec3 {
        let v = self.cell(c);
        v.iter().map(|&i| self.vertices[i]).sum::<Vec3>() / v.len() as f64
    }

    pub fn measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.signed_volume(c).abs()).sum()
    }

    pub fn phase_measure(&self, phase: Phase) -> f64 {
        (0..self.n_cells())
            .filter(|&c| self.phases[c] == phase)
            .map(|c| self.signed_volume(c).abs())
            .sum()
    }

    /// Makes every simplex positively oriented.
    pub fn orient(&mut self) {
        let k = self.dim + 1;
        for c in 0..self.n_cells() {
            if self.signed_volume(c) < 0.0 {
                self.connectivity.swap(c * k, c * k + 1);
            }
        }
    }

    /// Faces as sorted vertex tuples mapped to the simplices containing them.
    pub fn face_map(&self) -> HashMap<[usize; 3], Vec<usize>> {
        let mut map: HashMap<[usize; 3], Vec<usize>> = HashMap::with_capacity(self.n_cells() * (self.dim + 1));
        for c in 0..self.n_cells() {
            let v = self.cell(c);
            for skip in 0..=self.dim {
                map.entry(face_key(v, skip)).or_default().push(c);
            }
        }
        map
    }

    /// Simplices of one phase with vertices renumbered; also returns the
    /// parent vertex of every local vertex and the parent simplex of every local simplex.
    pub fn submesh(&self, phase: Phase) -> (SimplexMesh, Vec<usize>, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n_vertices()];
        let mut parent_vertex = Vec::new();
        let mut parent_cell = Vec::new();
        let mut conn = Vec::new();
        for c in 0..self.n_cells() {
            if self.phases[c] != phase {
                continue;
            }
            parent_cell.push(c);
            for &v in self.cell(c) {
                if local[v] == usize::MAX {
                    local[v] = parent_vertex.len();
                    parent_vertex.push(v);
                }
                conn.push(local[v]);
            }
        }
        let vertices = parent_vertex.iter().map(|&v| self.vertices[v]).collect();
        let phases = vec![phase; parent_cell.len()];
        (
            SimplexMesh {
                dim: self.dim,
                vertices,
                connectivity: conn,
                phases,
            },
            parent_vertex,
            parent_cell,
        )
    }

    /// Largest edge length over all simplices.
    pub fn max_edge(&self) -> f64 {
        let mut h = 0.0_f64;
        for c in 0..self.n_cells() {
            let v = self.cell(c);
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    h = h.max((self.vertices[v[i]] - self.vertices[v[j]]).norm());
                }
            }
        }
        h
    }
}

/// Sorted face tuple of simplex `v` without its `skip`-th vertex; unused slots are `usize::MAX`.
pub fn face_key(v: &[usize], skip: usize) -> [usize; 3] {
    let mut f = [usize::MAX; 3];
    let mut n = 0;
    for (i, &x) in v.iter().enumerate() {
        if i != skip {
            f[n] = x;
            n += 1;
        }
    }
    f[..n].sort_unstable();
    f
}

/// Unit normal and measure of a facet given by `dim` vertices; the normal
/// follows the vertex order (rotated tangent in 2-D, right-hand rule in 3-D).
pub fn facet_normal(dim: usize, p: &[Vec3]) -> (Vec3, f64) {
    if dim == 2 {
        let t = p[1] - p[0];
        let n = Vec3::new(t[1], -t[0], 0.0);
        let len = n.norm();
        (n / len, len)
    } else {
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let len = n.norm();
        (n / len, 0.5 * len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_triangle_gradients() {
        let m = SimplexMesh::new(
            2,
            vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            vec![0, 1, 2],
            vec![Phase::A],
        )
        .unwrap();
        let g = m.geometry(0);
        assert!((g.volume - 0.5).abs() < 1e-15);
        assert_eq!(g.gradients[0], Vec3::new(-1.0, -1.0, 0.0));
        assert_eq!(g.gradients[1], Vec3::x());
        assert_eq!(g.gradients[2], Vec3::y());
    }
}
