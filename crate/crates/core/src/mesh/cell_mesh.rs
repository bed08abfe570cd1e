use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kinematics::Phase;
use crate::mesh::simplex::{facet_normal, SimplexMesh};
use crate::tensor::Vec3;

/// One facet of the phase interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceFacet {
    /// `dim` vertex indices; the third slot is unused in 2-D.
    pub vertices: [usize; 3],
    /// Unit normal pointing out of the inclusion.
    pub normal: Vec3,
    pub measure: f64,
    pub inclusion_cell: usize,
    pub matrix_cell: usize,
}

impl InterfaceFacet {
    pub fn points(&self, mesh: &SimplexMesh) -> Vec<Vec3> {
        self.vertices[..mesh.dim].iter().map(|&v| mesh.vertices[v]).collect()
    }

    pub fn centroid(&self, mesh: &SimplexMesh) -> Vec3 {
        self.points(mesh).iter().sum::<Vec3>() / mesh.dim as f64
    }
}

/// Interface-fitted mesh of the unit cell with a centred circular or spherical inclusion.
#[derive(Clone, Debug)]
pub struct CellMesh {
    pub mesh: SimplexMesh,
    pub radius: f64,
    pub center: Vec3,
    pub interface: Vec<InterfaceFacet>,
    /// `(lower, upper)` vertex pairs identified across opposite cell faces.
    pub periodic_pairs: Vec<(usize, usize)>,
}

/// Fixed triangulation of `dim`-cubes: every permutation of the axes gives
/// one simplex walking from corner `0` to the opposite corner.
fn kuhn_paths(dim: usize) -> Vec<Vec<usize>> {
    if dim == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }
}

/// Structured simplicial mesh of the unit square/cube with `n` intervals per
/// axis. Each cube is split along the diagonal through its corner nearest the
/// domain centre, which keeps the mesh mirror-symmetric.
pub fn structured_mesh(n: usize, dim: usize) -> Result<(SimplexMesh, Vec<[usize; 3]>)> {
    if n == 0 || !(dim == 2 || dim == 3) {
        return Err(Error::Mesh(format!("cannot build a grid with {n} intervals in {dim} dimensions")));
    }
    let np = n + 1;
    let nverts = np.pow(dim as u32);
    let mut vertices = Vec::with_capacity(nverts);
    let mut lattice = Vec::with_capacity(nverts);
    for idx in 0..nverts {
        let mut ijk = [0usize; 3];
        let mut rest = idx;
        for a in (0..dim).rev() {
            ijk[a] = rest % np;
            rest /= np;
        }
        let mut p = Vec3::zeros();
        for a in 0..dim {
            p[a] = ijk[a] as f64 / n as f64;
        }
        vertices.push(p);
        lattice.push(ijk);
    }
    let vid = |ijk: &[usize; 3]| -> usize { (0..dim).fold(0, |acc, a| acc * np + ijk[a]) };
    let paths = kuhn_paths(dim);
    let ncubes = n.pow(dim as u32);
    let mut conn = Vec::with_capacity(ncubes * paths.len() * (dim + 1));
    for cube in 0..ncubes {
        let mut base = [0usize; 3];
        let mut rest = cube;
        for a in (0..dim).rev() {
            base[a] = rest % n;
            rest /= n;
        }
        // flip axes on the lower half so the diagonal points away from the centre
        let flip: Vec<bool> = (0..dim).map(|a| 2 * base[a] + 1 < n).collect();
        for path in &paths {
            let mut bits = [0usize; 3];
            let corner = |bits: &[usize; 3]| {
                let mut ijk = [0usize; 3];
                for a in 0..dim {
                    let b = if flip[a] { 1 - bits[a] } else { bits[a] };
                    ijk[a] = base[a] + b;
                }
                vid(&ijk)
            };
            conn.push(corner(&bits));
            for &axis in path {
                bits[axis] = 1;
                conn.push(corner(&bits));
            }
        }
    }
    let phases = vec![Phase::A; conn.len() / (dim + 1)];
    let mut mesh = SimplexMesh::new(dim, vertices, conn, phases)?;
    mesh.orient();
    Ok((mesh, lattice))
}

/// Radii of the interface shell and the outer blending shell in lattice units.
fn shells(radius: f64, n: usize) -> Result<(usize, usize)> {
    if n % 2 != 0 || n < 4 {
        return Err(Error::Mesh(format!("cell resolution {n} must be even and at least 4")));
    }
    let half = n / 2;
    let inner = ((radius * n as f64).round() as usize).max(1);
    if inner + 1 > half {
        return Err(Error::Mesh(format!(
            "resolution {n} too coarse to separate an interface of radius {radius} from the cell boundary"
        )));
    }
    let outer = inner + (half - inner).div_ceil(2);
    if radius >= outer as f64 / n as f64 {
        return Err(Error::Mesh(format!(
            "resolution {n} too coarse to separate an interface of radius {radius} from the cell boundary"
        )));
    }
    Ok((inner, outer))
}

/// Maps a lattice offset `k` (integer vector from the centre) so that the
/// cube shell `|k|_∞ = inner` lands on the sphere of `radius`; shells inside
/// are blended from cube to sphere, shells between `inner` and `outer` are
/// blended back to the untouched grid.
fn shell_map(k: &Vec3, n: usize, radius: f64, inner: usize, outer: usize) -> Vec3 {
    let linf = k.amax();
    if linf == 0.0 || linf >= outer as f64 {
        return k / n as f64;
    }
    let h = 1.0 / n as f64;
    let rho = linf * h;
    let (rho_in, rho_out) = (inner as f64 * h, outer as f64 * h);
    let cube_dir = k / linf;
    let sphere_dir = k / k.norm();
    let (big_r, beta) = if linf <= inner as f64 {
        (radius * rho / rho_in, rho / rho_in)
    } else {
        let lam = (rho - rho_in) / (rho_out - rho_in);
        (radius + lam * (rho_out - radius), 1.0 - lam)
    };
    (cube_dir * (1.0 - beta) + sphere_dir * beta) * big_r
}

/// Builds the interface-fitted cell mesh. `radius = 0` gives the plain
/// periodic grid without an inclusion.
pub fn build_cell_mesh(radius: f64, n: usize, dim: usize) -> Result<CellMesh> {
    if !(0.0..0.5).contains(&radius) {
        return Err(Error::Mesh(format!("inclusion radius {radius} outside [0, 0.5)")));
    }
    let center = Vec3::new(0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 });
    let (mut mesh, lattice) = structured_mesh(n, dim)?;
    let half = (n / 2) as isize;
    let mut interface = Vec::new();
    if radius > 0.0 {
        let (inner, outer) = shells(radius, n)?;
        let offsets: Vec<Vec3> = lattice
            .iter()
            .map(|ijk| {
                let mut k = Vec3::zeros();
                for a in 0..dim {
                    k[a] = (ijk[a] as isize - half) as f64;
                }
                k
            })
            .collect();
        for (v, k) in offsets.iter().enumerate() {
            if k.amax() >= outer as f64 {
                continue;
            }
            mesh.vertices[v] = center + shell_map(k, n, radius, inner, outer);
            if k.amax() == inner as f64 {
                // land exactly on the sphere
                let d = mesh.vertices[v] - center;
                mesh.vertices[v] = center + d * (radius / d.norm());
            }
        }
        for c in 0..mesh.n_cells() {
            let inside = mesh.cell(c).iter().all(|&v| offsets[v].amax() <= inner as f64);
            mesh.phases[c] = if inside { Phase::B } else { Phase::A };
        }
        mesh.orient();
        interface = interface_facets(&mesh)?;
    }
    let periodic_pairs = lattice_pairs(&lattice, n, dim);
    Ok(CellMesh {
        mesh,
        radius,
        center,
        interface,
        periodic_pairs,
    })
}

fn lattice_pairs(lattice: &[[usize; 3]], n: usize, dim: usize) -> Vec<(usize, usize)> {
    let np = n + 1;
    let vid = |ijk: &[usize; 3]| -> usize { (0..dim).fold(0, |acc, a| acc * np + ijk[a]) };
    let mut pairs = Vec::new();
    for a in 0..dim {
        for (v, ijk) in lattice.iter().enumerate() {
            if ijk[a] == 0 {
                let mut up = *ijk;
                up[a] = n;
                pairs.push((v, vid(&up)));
            }
        }
    }
    pairs
}

/// Facets shared by one inclusion simplex and one matrix simplex, with
/// normals oriented from the inclusion into the matrix.
pub fn interface_facets(mesh: &SimplexMesh) -> Result<Vec<InterfaceFacet>> {
    let dim = mesh.dim;
    let faces = mesh.face_map();
    let mut keys: Vec<(&[usize; 3], &Vec<usize>)> = faces.iter().collect();
    keys.sort_unstable_by_key(|(k, _)| **k);
    let mut out = Vec::new();
    for (key, cells) in keys {
        if cells.len() > 2 {
            return Err(Error::Mesh(format!("face {key:?} shared by {} simplices", cells.len())));
        }
        if cells.len() != 2 || mesh.phases[cells[0]] == mesh.phases[cells[1]] {
            continue;
        }
        let (b, a) = if mesh.phases[cells[0]] == Phase::B {
            (cells[0], cells[1])
        } else {
            (cells[1], cells[0])
        };
        let pts: Vec<Vec3> = key[..dim].iter().map(|&v| mesh.vertices[v]).collect();
        let (mut normal, measure) = facet_normal(dim, &pts);
        let fc = pts.iter().sum::<Vec3>() / dim as f64;
        if normal.dot(&(mesh.centroid(a) - fc)) < 0.0 {
            normal = -normal;
        }
        out.push(InterfaceFacet {
            vertices: *key,
            normal,
            measure,
            inclusion_cell: b,
            matrix_cell: a,
        });
    }
    Ok(out)
}

impl CellMesh {
    /// Wraps an imported mesh: interface facets from phase changes, periodic
    /// pairs by matching coordinates across opposite faces.
    pub fn from_mesh(mesh: SimplexMesh) -> Result<CellMesh> {
        let dim = mesh.dim;
        let interface = interface_facets(&mesh)?;
        let center = {
            let (mut s, mut w) = (Vec3::zeros(), 0.0);
            for c in 0..mesh.n_cells() {
                if mesh.phases[c] == Phase::B {
                    let v = mesh.signed_volume(c).abs();
                    s += mesh.centroid(c) * v;
                    w += v;
                }
            }
            if w > 0.0 {
                s / w
            } else {
                Vec3::new(0.5, 0.5, if dim == 3 { 0.5 } else { 0.0 })
            }
        };
        let radius = if interface.is_empty() {
            0.0
        } else {
            let total: f64 = interface.iter().map(|f| (f.centroid(&mesh) - center).norm()).sum();
            total / interface.len() as f64
        };
        let periodic_pairs = periodic_pairs_by_coordinates(&mesh, 1e-10)?;
        Ok(CellMesh {
            mesh,
            radius,
            center,
            interface,
            periodic_pairs,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    pub fn interface_measure(&self) -> f64 {
        self.interface.iter().map(|f| f.measure).sum()
    }

    /// Union-find leader of every vertex under the periodic identification
    /// (the smallest vertex index of each class).
    pub fn periodic_leaders(&self) -> Vec<usize> {
        let n = self.mesh.n_vertices();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.periodic_pairs {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }

    /// Vertices lying on the cell boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let dim = self.dim();
        self.mesh
            .vertices
            .iter()
            .map(|p| (0..dim).any(|a| p[a].abs() < 1e-12 || (p[a] - 1.0).abs() < 1e-12))
            .collect()
    }
}

/// Pairs vertices on `x_a = 0` with vertices on `x_a = 1` having equal other coordinates.
pub fn periodic_pairs_by_coordinates(mesh: &SimplexMesh, tol: f64) -> Result<Vec<(usize, usize)>> {
    let dim = mesh.dim;
    let key = |p: &Vec3, a: usize| -> Vec<i64> {
        (0..dim).filter(|&b| b != a).map(|b| (p[b] / tol).round() as i64).collect()
    };
    let mut pairs = Vec::new();
    for a in 0..dim {
        let mut upper: HashMap<Vec<i64>, usize> = HashMap::new();
        for (v, p) in mesh.vertices.iter().enumerate() {
            if (p[a] - 1.0).abs() < tol {
                upper.insert(key(p, a), v);
            }
        }
        for (v, p) in mesh.vertices.iter().enumerate() {
            if p[a].abs() < tol {
                match upper.get(&key(p, a)) {
                    Some(&w) => pairs.push((v, w)),
                    None => return Err(Error::Mesh(format!("vertex {v} has no periodic partner along axis {a}"))),
                }
            }
        }
    }
    Ok(pairs)
}

/// Simplices of the face map owned by one simplex only.
pub fn boundary_faces(mesh: &SimplexMesh) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = mesh
        .face_map()
        .into_iter()
        .filter(|(_, cells)| cells.len() == 1)
        .map(|(k, _)| k)
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_cell_measures() {
        let cm = build_cell_mesh(0.25, 16, 2).unwrap();
        assert!((cm.mesh.measure() - 1.0).abs() < 1e-10);
        for f in &cm.interface {
            for p in f.points(&cm.mesh) {
                assert!(((p - cm.center).norm() - 0.25).abs() < 1e-10);
            }
        }
        let area_b = cm.mesh.phase_measure(Phase::B);
        let exact = std::f64::consts::PI * 0.0625;
        assert!((area_b - exact).abs() / exact < 0.02);
        assert!((0..cm.mesh.n_cells()).all(|c| cm.mesh.signed_volume(c) > 0.0));
    }

    #[test]
    fn ball_cell_volume() {
        let cm = build_cell_mesh(0.25, 8, 3).unwrap();
        assert!((cm.mesh.measure() - 1.0).abs() < 1e-10);
        assert!((0..cm.mesh.n_cells()).all(|c| cm.mesh.signed_volume(c) > 0.0));
        assert!(!cm.interface.is_empty());
    }

    #[test]
    fn too_coarse_is_rejected() {
        assert!(build_cell_mesh(0.45, 4, 2).is_err());
    }
}
