/// Simplex quadrature in barycentric coordinates; weights sum to one.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Degree-2 rule: three interior points on triangles, four on tetrahedra.
pub fn simplex_rule(dim: usize) -> Quadrature {
    if dim == 2 {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Quadrature {
            points: vec![[a, b, b, 0.0], [b, a, b, 0.0], [b, b, a, 0.0]],
            weights: vec![1.0 / 3.0; 3],
        }
    } else {
        let a = 0.585_410_196_624_968_5;
        let b = 0.138_196_601_125_010_5;
        Quadrature {
            points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
            weights: vec![0.25; 4],
        }
    }
}

/// One-point centroid rule for a simplex with `nodes` vertices.
pub fn centroid_rule(nodes: usize) -> Quadrature {
    let mut p = [0.0; 4];
    p[..nodes].iter_mut().for_each(|x| *x = 1.0 / nodes as f64);
    Quadrature {
        points: vec![p],
        weights: vec![1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ λ_i λ_j over the reference simplex, divided by its volume.
    fn exact(dim: usize, i: usize, j: usize) -> f64 {
        let n = (dim + 1) as f64;
        let denom = n * (n + 1.0);
        if i == j {
            2.0 / denom
        } else {
            1.0 / denom
        }
    }

    #[test]
    fn degree_two_exactness() {
        for dim in [2, 3] {
            let q = simplex_rule(dim);
            for i in 0..=dim {
                for j in 0..=dim {
                    let v: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p[i] * p[j]).sum();
                    assert!((v - exact(dim, i, j)).abs() < 1e-14);
                }
            }
        }
    }
}
