//! Small fixed-size tensors.
//!
//! Every quantity lives in three-dimensional storage. Two-dimensional runs
//! keep the third vector component at zero, pad deformation gradients with a
//! unit third diagonal entry and leave all other third-axis entries at zero.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Identity on the first `dim` axes, zero elsewhere.
pub fn projector(dim: usize) -> Mat3 {
    let mut p = Mat3::zeros();
    for i in 0..dim {
        p[(i, i)] = 1.0;
    }
    p
}

/// Identity on the first `dim` axes and a unit entry on the unused ones, so
/// that determinants and inverses of padded gradients are the `dim`-block ones.
pub fn padded_identity() -> Mat3 {
    Mat3::identity()
}

pub fn sym(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

/// Unit symmetric basis strain `sym(e_j ⊗ e_k)`.
pub fn unit_strain(j: usize, k: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(j, k)] += 0.5;
    m[(k, j)] += 0.5;
    m
}

/// Ordered index pairs `(j, k)` with `j <= k` for a `dim`-dimensional problem.
pub fn symmetric_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for j in 0..dim {
        for k in j..dim {
            out.push((j, k));
        }
    }
    out
}

pub fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Eigenvalues of the symmetric part of the leading `dim` block, ascending.
pub fn block_eigenvalues(m: &Mat3, dim: usize) -> Vec<f64> {
    let s = sym(m);
    let block = DMatrix::from_fn(dim, dim, |i, j| s[(i, j)]);
    let mut ev: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[inline]
fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

/// Rank-four tensor with components `c[i][j][k][l]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4 {
    c: [f64; 81],
}

impl Default for Tensor4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Tensor4 {
    pub fn zeros() -> Self {
        Tensor4 { c: [0.0; 81] }
    }

    pub fn isotropic(lambda: f64, mu: f64, dim: usize) -> Self {
        let mut t = Self::zeros();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        t.c[idx(i, j, k, l)] =
                            lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        t
    }

    /// Builds the minor- and major-symmetric tensor whose Mandel matrix is `m`
    /// (ordering of [`symmetric_pairs`]).
    pub fn from_mandel(m: &DMatrix<f64>, dim: usize) -> Self {
        let pairs = symmetric_pairs(dim);
        let w = |p: (usize, usize)| if p.0 == p.1 { 1.0 } else { std::f64::consts::SQRT_2 };
        let mut t = Self::zeros();
        for (a, &pa) in pairs.iter().enumerate() {
            for (b, &pb) in pairs.iter().enumerate() {
                let v = m[(a, b)] / (w(pa) * w(pb));
                for (i, j) in [(pa.0, pa.1), (pa.1, pa.0)] {
                    for (k, l) in [(pb.0, pb.1), (pb.1, pb.0)] {
                        t.c[idx(i, j, k, l)] = v;
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.c[idx(i, j, k, l)] = v;
    }

    pub fn components(&self) -> &[f64; 81] {
        &self.c
    }

    /// `C : E`, i.e. `(C:E)_ij = C_ijkl E_kl`.
    pub fn contract(&self, e: &Mat3) -> Mat3 {
        let mut out = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += self.c[idx(i, j, k, l)] * e[(k, l)];
                    }
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// `A : C : B`.
    pub fn energy(&self, a: &Mat3, b: &Mat3) -> f64 {
        self.contract(b).component_mul(a).sum()
    }

    pub fn scale(&self, f: f64) -> Self {
        let mut t = self.clone();
        t.c.iter_mut().for_each(|v| *v *= f);
        t
    }

    pub fn add_scaled(&mut self, other: &Tensor4, f: f64) {
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += f * b;
        }
    }

    /// Mandel matrix on symmetric `dim × dim` strains.
    pub fn mandel(&self, dim: usize) -> DMatrix<f64> {
        let pairs = symmetric_pairs(dim);
        let w = |p: (usize, usize)| if p.0 == p.1 { 1.0 } else { std::f64::consts::SQRT_2 };
        DMatrix::from_fn(pairs.len(), pairs.len(), |a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            w(pairs[a]) * w(pairs[b]) * self.get(i, j, k, l)
        })
    }

    pub fn min_mandel_eigenvalue(&self, dim: usize) -> f64 {
        let m = self.mandel(dim);
        let m = (&m + m.transpose()) * 0.5;
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest violation of `C_ijkl = C_jikl = C_ijlk`, relative to the largest component.
    pub fn minor_symmetry_defect(&self, dim: usize) -> f64 {
        self.defect(dim, |i, j, k, l| (j, i, k, l))
            .max(self.defect(dim, |i, j, k, l| (i, j, l, k)))
    }

    /// Largest violation of `C_ijkl = C_klij`, relative to the largest component.
    pub fn major_symmetry_defect(&self, dim: usize) -> f64 {
        self.defect(dim, |i, j, k, l| (k, l, i, j))
    }

    fn defect(
        &self,
        dim: usize,
        perm: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize),
    ) -> f64 {
        let scale = self.c.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let (a, b, c, d) = perm(i, j, k, l);
                        worst = worst.max((self.get(i, j, k, l) - self.get(a, b, c, d)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.c
            .iter()
            .zip(other.c.iter())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mandel_roundtrip_and_isotropic_eigenvalues() {
        let c = Tensor4::isotropic(1.0, 1.0, 2);
        let m = c.mandel(2);
        let back = Tensor4::from_mandel(&m, 2);
        assert!(c.max_abs_diff(&back) < 1e-14);
        // eigenvalues 2μ (shear, twice) and 2μ + dλ (bulk)
        assert!((c.min_mandel_eigenvalue(2) - 2.0).abs() < 1e-12);
        let c3 = Tensor4::isotropic(2.0, 0.5, 3);
        assert!(c3.minor_symmetry_defect(3) == 0.0 && c3.major_symmetry_defect(3) == 0.0);
        assert!((c3.min_mandel_eigenvalue(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_matches_hooke_law() {
        let c = Tensor4::isotropic(2.0, 3.0, 3);
        let e = sym(&Mat3::new(1.0, 2.0, 0.0, 0.5, -1.0, 0.3, 0.0, 0.2, 0.4));
        let expected = Mat3::identity() * (2.0 * e.trace()) + e * 6.0;
        assert!(max_abs(&(c.contract(&e) - expected)) < 1e-13);
    }
}
