use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::parallel::dot;
use crate::fem::solver::{pcg, DenseFactor, Operator, SolveStats, SolverOptions};
use crate::fem::sparse::CsrMatrix;

/// Pins, identifications and weighted-mean conditions on a dof vector.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    pub n: usize,
    pins: BTreeMap<usize, f64>,
    identifications: BTreeMap<usize, usize>,
    means: Vec<(Vec<f64>, f64)>,
}

impl ConstraintSet {
    pub fn new(n: usize) -> Self {
        ConstraintSet {
            n,
            ..Default::default()
        }
    }

    pub fn pin(&mut self, dof: usize, value: f64) -> Result<()> {
        if dof >= self.n {
            return Err(Error::Constraint(format!("pinned dof {dof} out of range")));
        }
        match self.pins.insert(dof, value) {
            Some(old) if old != value => Err(Error::Constraint(format!(
                "dof {dof} pinned to both {old} and {value}"
            ))),
            _ => Ok(()),
        }
    }

    /// Makes `follower` share the value of `leader`.
    pub fn identify(&mut self, follower: usize, leader: usize) -> Result<()> {
        if follower >= self.n || leader >= self.n {
            return Err(Error::Constraint(format!("identification {follower} → {leader} out of range")));
        }
        if follower == leader {
            return Ok(());
        }
        if let Some(&old) = self.identifications.get(&follower) {
            if old != leader {
                return Err(Error::Constraint(format!("dof {follower} follows both {old} and {leader}")));
            }
        }
        self.identifications.insert(follower, leader);
        Ok(())
    }

    /// Requires `Σ w_i x_i = value`; realized with one Lagrange multiplier.
    pub fn mean(&mut self, weights: Vec<f64>, value: f64) -> Result<()> {
        if weights.len() != self.n {
            return Err(Error::Constraint("mean weights have the wrong length".into()));
        }
        self.means.push((weights, value));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.pins.is_empty() && self.identifications.is_empty() && self.means.is_empty()
    }

    /// Resolves identification chains and checks consistency.
    pub fn resolve(&self) -> Result<Reduction> {
        let n = self.n;
        let mut leader: Vec<usize> = (0..n).collect();
        for (&f, _) in &self.identifications {
            if self.pins.contains_key(&f) {
                return Err(Error::Constraint(format!("dof {f} is both pinned and identified")));
            }
            let mut cur = f;
            for step in 0.. {
                match self.identifications.get(&cur) {
                    Some(&next) => cur = next,
                    None => break,
                }
                if step > n {
                    return Err(Error::Constraint(format!("identification cycle through dof {f}")));
                }
            }
            leader[f] = cur;
        }
        let mut map = vec![usize::MAX; n];
        let mut pinned = vec![0.0; n];
        let mut free = 0;
        for i in 0..n {
            let l = leader[i];
            if let Some(&v) = self.pins.get(&l) {
                pinned[i] = v;
            } else if l == i {
                map[i] = free;
                free += 1;
            }
        }
        for i in 0..n {
            if leader[i] != i && !self.pins.contains_key(&leader[i]) {
                map[i] = map[leader[i]];
            }
        }
        let reduction = Reduction {
            n_full: n,
            n_reduced: free,
            map,
            pinned,
            means: Vec::new(),
        };
        let means = self
            .means
            .iter()
            .map(|(w, v)| {
                let fixed: f64 = (0..n).filter(|&i| reduction.map[i] == usize::MAX).map(|i| w[i] * reduction.pinned[i]).sum();
                (reduction.restrict(w), v - fixed)
            })
            .collect();
        Ok(Reduction { means, ..reduction })
    }
}

/// Map between full and reduced dof vectors.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub n_full: usize,
    pub n_reduced: usize,
    /// Reduced index of every full dof, `usize::MAX` when pinned.
    pub map: Vec<usize>,
    /// Values of pinned dofs (zero elsewhere).
    pub pinned: Vec<f64>,
    /// Reduced weights and targets of mean conditions.
    pub means: Vec<(Vec<f64>, f64)>,
}

impl Reduction {
    /// `Pᵀ v`: sums full entries into their reduced slots.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_reduced];
        for (i, &m) in self.map.iter().enumerate() {
            if m != usize::MAX {
                out[m] += v[i];
            }
        }
        out
    }

    /// Full vector from reduced values plus pinned values.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .enumerate()
            .map(|(i, &m)| if m == usize::MAX { self.pinned[i] } else { x[m] })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.n_reduced == self.n_full && self.map.iter().enumerate().all(|(i, &m)| m == i) && self.means.is_empty()
    }
}

/// Reduced matrix `PᵀAP` and right side `Pᵀ(b − A g)` with `g` the pinned values.
pub fn apply_constraints(a: &CsrMatrix, b: &[f64], cs: &ConstraintSet) -> Result<(CsrMatrix, Vec<f64>, Reduction)> {
    let red = cs.resolve()?;
    let (m, lift) = reduce_matrix(a, &red);
    let mut rhs = red.restrict(b);
    rhs.iter_mut().zip(&lift).for_each(|(r, l)| *r -= l);
    Ok((m, rhs, red))
}

fn reduce_matrix(a: &CsrMatrix, red: &Reduction) -> (CsrMatrix, Vec<f64>) {
    let ag = a.matvec(&red.pinned);
    let lift = red.restrict(&ag);
    let mut t = Vec::with_capacity(a.nnz());
    for r in 0..a.nrows {
        let mr = red.map[r];
        if mr == usize::MAX {
            continue;
        }
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let mc = red.map[c];
            if mc != usize::MAX {
                t.push((mr, mc, v));
            }
        }
    }
    (CsrMatrix::from_triplets(red.n_reduced, red.n_reduced, t), lift)
}

/// `A + ρ Σ w wᵀ`, positive definite when the weights see the kernel of `A`.
struct Augmented<'a> {
    a: &'a CsrMatrix,
    weights: Vec<&'a [f64]>,
    rho: f64,
}

impl Operator for Augmented<'_> {
    fn size(&self) -> usize {
        self.a.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.matvec_into(x, y);
        for w in &self.weights {
            let s = self.rho * dot(w, x);
            y.iter_mut().zip(w.iter()).for_each(|(yi, wi)| *yi += s * wi);
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.a.diagonal();
        for w in &self.weights {
            d.iter_mut().zip(w.iter()).for_each(|(di, wi)| *di += self.rho * wi * wi);
        }
        d
    }
}

/// A constrained SPD system prepared for repeated solves.
///
/// Mean conditions enter through Lagrange multipliers. The saddle-point
/// system is solved through the augmented matrix `S = A + ρWWᵀ`: with
/// `S X₁ = b`, `S X₂ = W`, the multiplier-corrected solution is
/// `x = X₁ − X₂ (WᵀX₂)⁻¹ (WᵀX₁ − g)`.
pub struct ConstrainedSystem {
    pub reduction: Reduction,
    pub matrix: CsrMatrix,
    full: CsrMatrix,
    lift: Vec<f64>,
    rho: f64,
    opts: SolverOptions,
    dense: Option<DenseFactor>,
    mean_solves: OnceLock<Result<(Vec<Vec<f64>>, DMatrix<f64>)>>,
}

impl ConstrainedSystem {
    pub fn new(a: &CsrMatrix, cs: &ConstraintSet, opts: SolverOptions) -> Result<Self> {
        if a.nrows != cs.n || a.ncols != cs.n {
            return Err(Error::Constraint(format!(
                "{}×{} matrix with constraints on {} dofs",
                a.nrows, a.ncols, cs.n
            )));
        }
        let reduction = cs.resolve()?;
        let (matrix, lift) = reduce_matrix(a, &reduction);
        let n = matrix.nrows;
        let mean_diag = if n > 0 { matrix.diagonal().iter().sum::<f64>() / n as f64 } else { 1.0 };
        let wnorm = reduction.means.iter().map(|(w, _)| dot(w, w)).fold(0.0, f64::max);
        let rho = if wnorm > 0.0 { mean_diag / wnorm } else { 0.0 };
        let dense = if n > 0 && n <= opts.dense_below {
            let mut d = matrix.to_dense();
            for (w, _) in &reduction.means {
                let wv = DVector::from_column_slice(w);
                d += &wv * wv.transpose() * rho;
            }
            Some(DenseFactor::new(d)?)
        } else {
            None
        };
        Ok(ConstrainedSystem {
            reduction,
            matrix,
            full: a.clone(),
            lift,
            rho,
            opts,
            dense,
            mean_solves: OnceLock::new(),
        })
    }

    pub fn n_reduced(&self) -> usize {
        self.matrix.nrows
    }

    /// The unconstrained matrix the system was built from.
    pub fn full_matrix(&self) -> &CsrMatrix {
        &self.full
    }

    fn raw_solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        if let Some(f) = &self.dense {
            return Ok((f.solve(b), SolveStats::default()));
        }
        if self.reduction.means.is_empty() {
            return pcg(&self.matrix, b, guess, &self.opts);
        }
        let op = Augmented {
            a: &self.matrix,
            weights: self.reduction.means.iter().map(|(w, _)| w.as_slice()).collect(),
            rho: self.rho,
        };
        pcg(&op, b, guess, &self.opts)
    }

    fn mean_data(&self) -> Result<&(Vec<Vec<f64>>, DMatrix<f64>)> {
        let r = self.mean_solves.get_or_init(|| {
            let means = &self.reduction.means;
            let mut cols = Vec::with_capacity(means.len());
            for (w, _) in means {
                cols.push(self.raw_solve(w, None)?.0);
            }
            let k = means.len();
            let gram = DMatrix::from_fn(k, k, |i, j| dot(&means[i].0, &cols[j]));
            Ok((cols, gram))
        });
        r.as_ref().map_err(|e| Error::Constraint(format!("mean-condition solves failed: {e}")))
    }

    /// Solves with a reduced right-hand side, returning reduced unknowns.
    pub fn solve_reduced(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let (mut x, stats) = self.raw_solve(rhs, guess)?;
        let means = &self.reduction.means;
        if !means.is_empty() {
            let (cols, gram) = self.mean_data()?;
            let defect = DVector::from_iterator(means.len(), means.iter().map(|(w, g)| dot(w, &x) - g));
            let mu = gram
                .clone()
                .lu()
                .solve(&defect)
                .ok_or_else(|| Error::Constraint("mean conditions are degenerate".into()))?;
            for (c, m) in cols.iter().zip(mu.iter()) {
                x.iter_mut().zip(c).for_each(|(xi, ci)| *xi -= m * ci);
            }
        }
        Ok((x, stats))
    }

    /// Reduced right side of a full load vector.
    pub fn reduce_rhs(&self, b: &[f64]) -> Vec<f64> {
        let mut r = self.reduction.restrict(b);
        r.iter_mut().zip(&self.lift).for_each(|(ri, l)| *ri -= l);
        r
    }

    /// Solves `A x = b` under the constraints; returns the full dof vector.
    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let rhs = self.reduce_rhs(b);
        let g = guess.map(|g| {
            let mut r = vec![0.0; self.n_reduced()];
            for (i, &m) in self.reduction.map.iter().enumerate() {
                if m != usize::MAX {
                    r[m] = g[i];
                }
            }
            r
        });
        let (x, stats) = self.solve_reduced(&rhs, g.as_deref())?;
        Ok((self.reduction.expand(&x), stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn no_constraints_is_identity_reduction() {
        let a = chain(4);
        let (m, b, r) = apply_constraints(&a, &[1.0, 2.0, 3.0, 4.0], &ConstraintSet::new(4)).unwrap();
        assert!(r.is_identity());
        assert_eq!(m, a);
        assert_eq!(b, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn periodic_chain_is_circulant() {
        // nodes 0..4 on a line, node 4 identified with node 0
        let a = chain(5);
        let mut cs = ConstraintSet::new(5);
        cs.identify(4, 0).unwrap();
        let (m, _, _) = apply_constraints(&a, &[0.0; 5], &cs).unwrap();
        let d = m.to_dense();
        let circ = DMatrix::from_row_slice(
            4,
            4,
            &[2.0, -1.0, 0.0, -1.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, -1.0, 0.0, -1.0, 2.0],
        );
        assert_eq!(d, circ);
    }

    #[test]
    fn fully_pinned_returns_pins() {
        let a = CsrMatrix::identity(1);
        let mut cs = ConstraintSet::new(1);
        cs.pin(0, 0.0).unwrap();
        let sys = ConstrainedSystem::new(&a, &cs, SolverOptions::default()).unwrap();
        assert_eq!(sys.solve(&[3.0], None).unwrap().0, vec![0.0]);
        assert!(cs.pin(0, 1.0).is_err());
    }

    #[test]
    fn zero_mean_periodic_solve() {
        let n = 9;
        let a = chain(n);
        let mut cs = ConstraintSet::new(n);
        cs.identify(n - 1, 0).unwrap();
        let mut w = vec![1.0; n];
        w[0] = 0.5;
        w[n - 1] = 0.5;
        cs.mean(w.clone(), 0.0).unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7).sin()).collect();
        let mut bb = b.clone();
        let shift = bb.iter().take(n - 1).sum::<f64>() / (n - 1) as f64;
        bb.iter_mut().take(n - 1).for_each(|x| *x -= shift);
        bb[n - 1] = 0.0;
        for dense in [0, 100] {
            let opts = SolverOptions { dense_below: dense, ..Default::default() };
            let sys = ConstrainedSystem::new(&a, &cs, opts).unwrap();
            let (x, _) = sys.solve(&bb, None).unwrap();
            assert!(dot(&w, &x).abs() < 1e-12);
            assert_eq!(x[0], x[n - 1]);
            let r = sys.matrix.matvec(&x[..n - 1]);
            let rhs = sys.reduce_rhs(&bb);
            let res = r.iter().zip(&rhs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(res < 1e-9, "residual {res}");
        }
    }
}
