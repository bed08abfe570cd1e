use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kinematics::Phase;
use crate::mesh::cell_mesh::{boundary_faces, CellMesh, InterfaceFacet};
use crate::mesh::simplex::SimplexMesh;
use crate::tensor::Vec3;

/// The unit square/cube tiled by copies of a cell mesh scaled by `eps`.
#[derive(Clone, Debug)]
pub struct EpsilonMesh {
    pub mesh: SimplexMesh,
    pub eps: f64,
    pub tiles_per_axis: usize,
    pub interface: Vec<InterfaceFacet>,
    /// Facets on the outer boundary of the unit square/cube.
    pub boundary_facets: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    /// Tile index and cell-mesh simplex of every simplex.
    pub element_origin: Vec<(usize, usize)>,
    /// Tile index and cell-mesh vertex of every vertex (first copy).
    pub vertex_origin: Vec<(usize, usize)>,
    /// Lower corner of every tile.
    pub tile_corner: Vec<Vec3>,
}

fn tile_count(eps: f64) -> Result<usize> {
    let inv = 1.0 / eps;
    let n = inv.round();
    if !(eps > 0.0) || (inv - n).abs() > 1e-9 * inv || n < 1.0 {
        return Err(Error::Mesh(format!("1/eps = {inv} is not a positive integer")));
    }
    Ok(n as usize)
}

/// Tiles `cell` over the unit square/cube with cell size `eps`, merging
/// coincident vertices within `eps · 1e-9`.
pub fn build_epsilon_mesh(cell: &CellMesh, eps: f64) -> Result<EpsilonMesh> {
    let n = tile_count(eps)?;
    let eps = 1.0 / n as f64;
    let dim = cell.dim();
    let cm = &cell.mesh;
    let tol = eps * 1e-9;
    let bucket = eps * 1e-6;
    let on_cell_boundary = cell.boundary_vertices();
    let ntiles = n.pow(dim as u32);

    let mut vertices: Vec<Vec3> = Vec::with_capacity(ntiles * cm.n_vertices());
    let mut vertex_origin = Vec::with_capacity(vertices.capacity());
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut conn = Vec::with_capacity(ntiles * cm.connectivity().len());
    let mut phases = Vec::with_capacity(ntiles * cm.n_cells());
    let mut element_origin = Vec::with_capacity(ntiles * cm.n_cells());
    let mut interface = Vec::with_capacity(ntiles * cell.interface.len());
    let mut tile_corner = Vec::with_capacity(ntiles);
    let face_scale = eps.powi(dim as i32 - 1);

    for tile in 0..ntiles {
        let mut corner = Vec3::zeros();
        let mut rest = tile;
        for a in (0..dim).rev() {
            corner[a] = (rest % n) as f64 * eps;
            rest /= n;
        }
        tile_corner.push(corner);
        let mut local_to_global = Vec::with_capacity(cm.n_vertices());
        for (lv, y) in cm.vertices.iter().enumerate() {
            let x = corner + y * eps;
            let key_of = |p: &Vec3| -> [i64; 3] {
                let mut k = [0i64; 3];
                for a in 0..dim {
                    k[a] = (p[a] / bucket).floor() as i64;
                }
                k
            };
            let mut found = None;
            if on_cell_boundary[lv] {
                let k = key_of(&x);
                'search: for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dz in if dim == 3 { -1..=1i64 } else { 0..=0 } {
                            if let Some(list) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                                for &g in list {
                                    if (vertices[g] - x).norm() <= tol {
                                        found = Some(g);
                                        break 'search;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let g = match found {
                Some(g) => g,
                None => {
                    let g = vertices.len();
                    vertices.push(x);
                    vertex_origin.push((tile, lv));
                    if on_cell_boundary[lv] {
                        buckets.entry(key_of(&x)).or_default().push(g);
                    }
                    g
                }
            };
            local_to_global.push(g);
        }
        let base_cell = phases.len();
        for c in 0..cm.n_cells() {
            conn.extend(cm.cell(c).iter().map(|&v| local_to_global[v]));
            phases.push(cm.phases[c]);
            element_origin.push((tile, c));
        }
        for f in &cell.interface {
            let mut v = [usize::MAX; 3];
            for i in 0..dim {
                v[i] = local_to_global[f.vertices[i]];
            }
            interface.push(InterfaceFacet {
                vertices: v,
                normal: f.normal,
                measure: f.measure * face_scale,
                inclusion_cell: base_cell + f.inclusion_cell,
                matrix_cell: base_cell + f.matrix_cell,
            });
        }
    }

    let mesh = SimplexMesh::new(dim, vertices, conn, phases)?;
    let boundary_vertex: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|p| (0..dim).any(|a| p[a].abs() <= tol || (p[a] - 1.0).abs() <= tol))
        .collect();
    let boundary_facets: Vec<[usize; 3]> = boundary_faces(&mesh)
        .into_iter()
        .filter(|f| f[..dim].iter().all(|&v| boundary_vertex[v]))
        .collect();
    Ok(EpsilonMesh {
        mesh,
        eps,
        tiles_per_axis: n,
        interface,
        boundary_facets,
        boundary_vertex,
        element_origin,
        vertex_origin,
        tile_corner,
    })
}

impl EpsilonMesh {
    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    /// Cell coordinate of a point of simplex `e`.
    pub fn cell_point(&self, e: usize, x: &Vec3) -> Vec3 {
        let corner = self.tile_corner[self.element_origin[e].0];
        let mut y = (x - corner) / self.eps;
        for a in self.dim()..3 {
            y[a] = 0.0;
        }
        for a in 0..self.dim() {
            y[a] = y[a].clamp(0.0, 1.0);
        }
        y
    }

    /// Number of connected inclusion components (simplices sharing a vertex).
    pub fn inclusion_components(&self) -> usize {
        let m = &self.mesh;
        let mut parent: Vec<usize> = (0..m.n_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut used = vec![false; m.n_vertices()];
        for c in 0..m.n_cells() {
            if m.phases[c] != Phase::B {
                continue;
            }
            let v = m.cell(c);
            for &w in v {
                used[w] = true;
            }
            for &w in &v[1..] {
                let (a, b) = (find(&mut parent, v[0]), find(&mut parent, w));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = (0..m.n_vertices()).filter(|&v| used[v]).map(|v| find(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// True when no boundary vertex belongs to an inclusion simplex.
    pub fn boundary_touches_only_matrix(&self) -> bool {
        let m = &self.mesh;
        (0..m.n_cells())
            .filter(|&c| m.phases[c] == Phase::B)
            .all(|c| m.cell(c).iter().all(|&v| !self.boundary_vertex[v]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cell_mesh::build_cell_mesh;

    #[test]
    fn tiling_counts() {
        let cell = build_cell_mesh(0.25, 8, 2).unwrap();
        let em = build_epsilon_mesh(&cell, 0.5).unwrap();
        assert_eq!(em.mesh.n_cells(), 4 * cell.mesh.n_cells());
        // (2·8 + 1)^2 lattice points plus the interior non-lattice ones are all distinct
        assert!((em.mesh.measure() - 1.0).abs() < 1e-12);
        let em4 = build_epsilon_mesh(&cell, 0.25).unwrap();
        assert_eq!(em4.inclusion_components(), 16);
        assert!(em4.boundary_touches_only_matrix());
        assert!(build_epsilon_mesh(&cell, 0.3).is_err());
    }
}
