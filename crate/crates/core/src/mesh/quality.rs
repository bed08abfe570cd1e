use crate::mesh::simplex::{face_key, facet_normal, SimplexMesh};
use crate::tensor::{Mat3, Vec3};

/// Shape statistics of a simplicial mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality {
    /// `R / (d · r)` with circumradius `R` and inradius `r`; 1 for regular simplices.
    pub min_aspect_ratio: f64,
    pub max_aspect_ratio: f64,
    pub min_volume: f64,
    pub max_volume: f64,
    /// Indices of simplices with non-positive signed volume.
    pub degenerate: Vec<usize>,
    pub consistently_oriented: bool,
}

impl MeshQuality {
    pub fn passed(&self) -> bool {
        self.degenerate.is_empty() && self.consistently_oriented
    }
}

impl std::fmt::Display for MeshQuality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "aspect ratio range  [{:.6e}, {:.6e}]", self.min_aspect_ratio, self.max_aspect_ratio)?;
        writeln!(f, "volume range        [{:.6e}, {:.6e}]", self.min_volume, self.max_volume)?;
        writeln!(f, "oriented            {}", self.consistently_oriented)?;
        if self.degenerate.is_empty() {
            writeln!(f, "mesh quality: pass")
        } else {
            writeln!(f, "degenerate simplices {:?}", self.degenerate)?;
            writeln!(f, "mesh quality: FAIL")
        }
    }
}

fn circumradius(dim: usize, p: &[Vec3]) -> f64 {
    let mut m = Mat3::identity();
    let mut rhs = Vec3::zeros();
    for i in 0..dim {
        let e = p[i + 1] - p[0];
        for c in 0..3 {
            m[(i, c)] = 2.0 * e[c];
        }
        rhs[i] = e.norm_squared();
    }
    if dim == 2 {
        m[(2, 0)] = 0.0;
        m[(2, 1)] = 0.0;
        m[(2, 2)] = 1.0;
        m[(0, 2)] = 0.0;
        m[(1, 2)] = 0.0;
    }
    match m.try_inverse() {
        Some(inv) => (inv * rhs).norm(),
        None => f64::INFINITY,
    }
}

/// Aspect ratio `R / (d · r)` of simplex `c`.
pub fn aspect_ratio(mesh: &SimplexMesh, c: usize) -> f64 {
    let dim = mesh.dim;
    let v = mesh.cell(c);
    let p: Vec<Vec3> = v.iter().map(|&i| mesh.vertices[i]).collect();
    let vol = mesh.signed_volume(c).abs();
    let surface: f64 = (0..=dim)
        .map(|skip| {
            let f = face_key(v, skip);
            let q: Vec<Vec3> = f[..dim].iter().map(|&i| mesh.vertices[i]).collect();
            facet_normal(dim, &q).1
        })
        .sum();
    if vol <= 0.0 || surface <= 0.0 {
        return f64::INFINITY;
    }
    let inradius = dim as f64 * vol / surface;
    circumradius(dim, &p) / (dim as f64 * inradius)
}

pub fn mesh_quality(mesh: &SimplexMesh) -> MeshQuality {
    let mut q = MeshQuality {
        min_aspect_ratio: f64::INFINITY,
        max_aspect_ratio: 0.0,
        min_volume: f64::INFINITY,
        max_volume: 0.0,
        degenerate: Vec::new(),
        consistently_oriented: true,
    };
    let mut sign = 0.0_f64;
    let floor = 1e-14 * mesh.max_edge().powi(mesh.dim as i32);
    for c in 0..mesh.n_cells() {
        let sv = mesh.signed_volume(c);
        if sv <= floor {
            q.degenerate.push(c);
        }
        if sv != 0.0 {
            if sign == 0.0 {
                sign = sv.signum();
            } else if sv.signum() != sign {
                q.consistently_oriented = false;
            }
        }
        q.min_volume = q.min_volume.min(sv.abs());
        q.max_volume = q.max_volume.max(sv.abs());
        let ar = aspect_ratio(mesh, c);
        q.min_aspect_ratio = q.min_aspect_ratio.min(ar);
        q.max_aspect_ratio = q.max_aspect_ratio.max(ar);
    }
    q
}
