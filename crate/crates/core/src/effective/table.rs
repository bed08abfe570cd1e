use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cell::{CellDomain, SampleCache};
use crate::effective::checks::{check_invariants, InvariantReport};
use crate::effective::coefficients::{effective_coefficients, CellSolution, EffectiveCoefficients, EffectiveOptions};
use crate::error::{Result, ResultExt};
use crate::kinematics::{MaterialParams, Sources, Transformation};
use crate::tensor::Vec3;

/// Cache of cell solutions keyed by quantized `(t, x)`.
pub type EffectiveCache = SampleCache<CellSolution>;

/// Shared inputs of cell-problem evaluations.
pub struct CellContext<'a> {
    pub domain: &'a CellDomain,
    pub transformation: &'a Transformation,
    pub material: &'a MaterialParams,
    pub sources: &'a Sources,
    pub options: EffectiveOptions,
}

impl CellContext<'_> {
    /// Cached cell solution at the representative sample of `(t, x)`.
    pub fn solve(&self, cache: &EffectiveCache, t: f64, x: &Vec3) -> Result<Arc<CellSolution>> {
        cache
            .get_or_compute(t, x, |rt, rx| {
                effective_coefficients(self.domain, self.transformation, self.material, self.sources, rt, rx, &self.options)
            })
            .context(|| format!("cell problem at t = {t}, x = {:?}", &x.as_slice()[..self.domain.dim()]))
    }
}

/// Effective coefficients over a grid of samples, row-major in (time, point).
#[derive(Clone, Debug)]
pub struct EffectiveTable {
    pub dim: usize,
    pub rows: Vec<EffectiveCoefficients>,
    pub reports: Vec<InvariantReport>,
}

pub fn tabulate_effective(
    ctx: &CellContext,
    cache: &EffectiveCache,
    times: &[f64],
    points: &[Vec3],
    check_tol: f64,
) -> Result<EffectiveTable> {
    let samples: Vec<(f64, Vec3)> = times.iter().flat_map(|&t| points.iter().map(move |x| (t, *x))).collect();
    let rows: Vec<EffectiveCoefficients> = samples
        .par_iter()
        .map(|(t, x)| {
            let s = ctx.solve(cache, *t, x)?;
            let mut e = s.effective.clone();
            e.t = *t;
            e.x = *x;
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let reports = rows.iter().map(|r| check_invariants(r, check_tol)).collect();
    Ok(EffectiveTable {
        dim: ctx.domain.dim(),
        rows,
        reports,
    })
}

fn idx(parts: &[usize]) -> String {
    parts.iter().map(|p| (p + 1).to_string()).collect()
}

/// Header naming every column in a fixed order.
pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for a in 0..dim {
        h.push(format!("x{}", a + 1));
    }
    h.push("Y_A_measure".into());
    h.push("Y_B_measure".into());
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    h.push(format!("C_eff_{}", idx(&[i, j, k, l])));
                }
            }
        }
    }
    for name in ["alpha_eff", "K_eff"] {
        for i in 0..dim {
            for j in 0..dim {
                h.push(format!("{name}_{}", idx(&[i, j])));
            }
        }
    }
    h.push("c_eff".into());
    for i in 0..dim {
        for j in 0..dim {
            h.push(format!("gamma_eff_{}", idx(&[i, j])));
        }
    }
    for i in 0..dim {
        h.push(format!("H_eff_{}", i + 1));
    }
    h.push("W_eff".into());
    for i in 0..dim {
        h.push(format!("f_u_eff_{}", i + 1));
    }
    h.push("f_theta_eff".into());
    h
}

pub fn csv_row(e: &EffectiveCoefficients) -> Vec<f64> {
    let dim = e.dim;
    let mut r = vec![e.t];
    r.extend((0..dim).map(|a| e.x[a]));
    r.push(e.matrix_measure);
    r.push(e.inclusion_measure);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    r.push(e.stiffness.get(i, j, k, l));
                }
            }
        }
    }
    for m in [&e.expansion, &e.conductivity] {
        for i in 0..dim {
            for j in 0..dim {
                r.push(m[(i, j)]);
            }
        }
    }
    r.push(e.capacity);
    for i in 0..dim {
        for j in 0..dim {
            r.push(e.dissipation[(i, j)]);
        }
    }
    r.extend((0..dim).map(|a| e.curvature_force[a]));
    r.push(e.latent_source);
    r.extend((0..dim).map(|a| e.force[a]));
    r.push(e.heat_source);
    r
}

impl EffectiveTable {
    pub fn to_csv(&self) -> String {
        let mut s = csv_header(self.dim).join(",");
        s.push('\n');
        for row in &self.rows {
            let vals: Vec<String> = csv_row(row).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", vals.join(","));
        }
        s
    }
}
