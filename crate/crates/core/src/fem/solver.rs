use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fem::parallel::{axpy, dot, norm, xpay};
use crate::fem::sparse::CsrMatrix;

/// Symmetric linear operator for conjugate gradients.
pub trait Operator: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

impl Operator for CsrMatrix {
    fn size(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Systems with at most this many unknowns are factorized densely.
    pub dense_below: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 20_000,
            dense_below: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(op: &dyn Operator, b: &[f64], x0: Option<&[f64]>, opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = op.size();
    assert_eq!(b.len(), n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], |g| g.to_vec());
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut res = norm(&r) / bnorm;
    let mut history = vec![res];
    if res <= opts.tol {
        return Ok((x, SolveStats { iterations: 0, relative_residual: res }));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        op.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite { iteration: it, curvature });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        res = norm(&r) / bnorm;
        history.push(res);
        if res <= opts.tol {
            return Ok((x, SolveStats { iterations: it, relative_residual: res }));
        }
        z.iter_mut().zip(r.iter().zip(&inv_diag)).for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        xpay(&z, rz_new / rz, &mut p);
        rz = rz_new;
    }
    let tail = history.len().saturating_sub(8);
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: res,
        history: history.split_off(tail),
    })
}

/// Dense Cholesky factorization of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct DenseFactor(Cholesky<f64, Dyn>);

impl DenseFactor {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        Cholesky::new(a)
            .map(DenseFactor)
            .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.0.solve(&DVector::from_column_slice(b)).as_slice().to_vec()
    }
}

/// Solves `A x = b` with PCG, or densely when `A` is small enough.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    if a.nrows <= opts.dense_below {
        let f = DenseFactor::new(a.to_dense())?;
        return Ok((f.solve(b), SolveStats::default()));
    }
    pcg(a, b, None, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_in_one_step() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let (x, s) = pcg(&a, &b, None, &SolverOptions::default()).unwrap();
        assert_eq!(x, b);
        assert!(s.iterations <= 1);
    }

    #[test]
    fn random_spd_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * n as f64;
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sparse = CsrMatrix::from_dense(&a);
        let (x, _) = pcg(&sparse, &b, None, &SolverOptions::default()).unwrap();
        let xd = DenseFactor::new(a).unwrap().solve(&b);
        let err = x.iter().zip(&xd).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8);
    }

    #[test]
    fn indefinite_is_detected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        let err = pcg(&a, &[0.0, 1.0], None, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Indefinite { .. }));
    }
}
