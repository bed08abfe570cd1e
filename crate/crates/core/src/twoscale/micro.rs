use crate::cell::{CellCoefficients, CellDomain};
use crate::error::{Result, ResultExt};
use crate::fem::{parallel::dot, Assembler, ConstrainedSystem, ConstraintSet, CsrMatrix, SolverOptions};

/// Dirichlet structure of the inclusion problems: every inclusion vertex
/// on the interface is pinned.
#[derive(Clone, Debug)]
pub struct MicroSpace {
    pub dim: usize,
    pub n_vertices: usize,
    /// Inclusion-mesh vertices on the interface.
    pub boundary: Vec<bool>,
    heat: ConstraintSet,
    elastic: ConstraintSet,
}

impl MicroSpace {
    pub fn new(domain: &CellDomain) -> Result<Self> {
        let dim = domain.dim();
        let n = domain.inclusion.mesh.n_vertices();
        let mut boundary = vec![false; n];
        for f in &domain.cell.interface {
            for &v in &f.vertices[..dim] {
                boundary[domain.inclusion_index[v]] = true;
            }
        }
        let mut heat = ConstraintSet::new(n);
        let mut elastic = ConstraintSet::new(n * dim);
        for (v, _) in boundary.iter().enumerate().filter(|(_, b)| **b) {
            heat.pin(v, 0.0)?;
            for a in 0..dim {
                elastic.pin(v * dim + a, 0.0)?;
            }
        }
        Ok(MicroSpace {
            dim,
            n_vertices: n,
            boundary,
            heat,
            elastic,
        })
    }
}

/// Discrete inclusion operators at one `(t, x)` for implicit Euler with step `dt`.
pub struct MicroOperators {
    pub t: f64,
    pub dt: f64,
    mass: CsrMatrix,
    heat: ConstrainedSystem,
    /// Temperature response to a unit interface value (`1` on the interface).
    pub response: Vec<f64>,
    /// `∫ c_ref φ_i`, so that the heat content is `capacity_weights · θ`.
    pub capacity_weights: Vec<f64>,
    /// Heat content of the unit response.
    pub kappa: f64,
    dissipation: CsrMatrix,
    dissipation_weights: Vec<f64>,
    elastic: ConstrainedSystem,
    expansion: CsrMatrix,
    transport: CsrMatrix,
    dissipation_transport: CsrMatrix,
    heat_load: Vec<f64>,
    force_load: Vec<f64>,
}

/// Inclusion temperature and displacement at one site, with the data the
/// next time step needs from this one.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroState {
    pub theta: Vec<f64>,
    /// Displacement relative to the macroscopic one.
    pub displacement: Vec<f64>,
    /// `M_c θ + D w`: the nodal stored heat.
    pub content: Vec<f64>,
    /// Transport terms, applied explicitly in the next step.
    pub transport: Vec<f64>,
    /// `∫ c_ref θ`.
    pub heat_content: f64,
    /// `∫ γ_ref : ∇w`.
    pub dissipation: f64,
}

impl MicroOperators {
    pub fn new(
        space: &MicroSpace,
        domain: &CellDomain,
        coeffs: &CellCoefficients,
        dt: f64,
        solver: &SolverOptions,
    ) -> Result<Self> {
        let c = &coeffs.inclusion;
        let asm = Assembler::new(&domain.inclusion.mesh);
        let opts = SolverOptions {
            dense_below: solver.dense_below.max(500),
            ..*solver
        };
        let mass = asm.mass(|q| c[q].capacity)?;
        let conduction = asm.diffusion(|q| c[q].conductivity)?;
        let heat_matrix = mass.scaled(1.0 / dt).add_scaled(&conduction, 1.0);
        let heat = ConstrainedSystem::new(&heat_matrix, &space.heat, opts)?;
        let ones = vec![1.0; space.n_vertices];
        let lift: Vec<f64> = heat_matrix.matvec(&ones).iter().map(|v| -v).collect();
        let (mut response, _) = heat.solve(&lift, None).context(|| "inclusion unit response".into())?;
        response.iter_mut().for_each(|r| *r += 1.0);
        let capacity_weights = mass.row_sums();
        let kappa = dot(&capacity_weights, &response);
        let dissipation = asm.coupling(|q| c[q].dissipation)?.transpose();
        let dissipation_weights = dissipation.transpose().row_sums();
        let elastic_matrix = asm.elasticity(|q| c[q].stiffness)?;
        let elastic = ConstrainedSystem::new(&elastic_matrix, &space.elastic, opts)?;
        let expansion = asm.coupling(|q| c[q].expansion)?;
        let transport = asm.advection(|q| c[q].velocity * c[q].capacity)?;
        let dissipation_transport = asm.dissipation_advection(|q| (c[q].velocity, c[q].dissipation))?;
        Ok(MicroOperators {
            t: coeffs.t,
            dt,
            mass,
            heat,
            response,
            capacity_weights,
            kappa,
            dissipation,
            dissipation_weights,
            elastic,
            expansion,
            transport,
            dissipation_transport,
            heat_load: asm.scalar_load(|q| c[q].heat_source),
            force_load: asm.vector_load(|q| c[q].force),
        })
    }

    /// Temperature for a zero interface value, given the previous state and
    /// the current displacement iterate.
    pub fn heat_remainder(&self, prev: &MicroState, displacement: &[f64]) -> Result<Vec<f64>> {
        let dw = self.dissipation.matvec(displacement);
        let b: Vec<f64> = (0..prev.content.len())
            .map(|i| (prev.content[i] - dw[i]) / self.dt + self.heat_load[i] - prev.transport[i])
            .collect();
        Ok(self.heat.solve(&b, None)?.0)
    }

    /// Heat content of a remainder field.
    pub fn content_of(&self, theta: &[f64]) -> f64 {
        dot(&self.capacity_weights, theta)
    }

    /// `∫ γ_ref : ∇w`.
    pub fn state_dissipation(&self, displacement: &[f64]) -> f64 {
        dot(&self.dissipation_weights, displacement)
    }

    /// `θᵀ M_c θ`.
    pub fn energy(&self, theta: &[f64]) -> f64 {
        dot(theta, &self.mass.matvec(theta))
    }

    /// Full temperature for interface value `theta_a`.
    pub fn temperature(&self, theta_a: f64, remainder: &[f64]) -> Vec<f64> {
        self.response.iter().zip(remainder).map(|(r, z)| theta_a * r + z).collect()
    }

    /// Quasi-static inclusion displacement for a temperature field.
    pub fn displacement(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut b = self.expansion.matvec(theta);
        b.iter_mut().zip(&self.force_load).for_each(|(bi, f)| *bi += f);
        Ok(self.elastic.solve(&b, None)?.0)
    }

    /// Assembles the state from converged fields.
    pub fn state(&self, theta: Vec<f64>, displacement: Vec<f64>) -> MicroState {
        let mut content = self.mass.matvec(&theta);
        let dw = self.dissipation.matvec(&displacement);
        content.iter_mut().zip(&dw).for_each(|(c, d)| *c += d);
        let mut transport = self.transport.matvec(&theta);
        let tw = self.dissipation_transport.matvec(&displacement);
        transport.iter_mut().zip(&tw).for_each(|(c, d)| *c += d);
        MicroState {
            heat_content: dot(&self.capacity_weights, &theta),
            dissipation: dot(&self.dissipation_weights, &displacement),
            theta,
            displacement,
            content,
            transport,
        }
    }

    /// Initial state: the interface value overrides the trace of `theta0`,
    /// and the displacement is in equilibrium with the temperature.
    pub fn initial_state(&self, space: &MicroSpace, theta_a: f64, mut theta0: Vec<f64>) -> Result<MicroState> {
        for (v, b) in space.boundary.iter().enumerate() {
            if *b {
                theta0[v] = theta_a;
            }
        }
        let w = self.displacement(&theta0)?;
        Ok(self.state(theta0, w))
    }
}

/// One implicit-Euler step of the inclusion heat equation with interface
/// value `theta_a`, followed by the quasi-static displacement; the
/// dissipation uses the displacement iterate `lagged`.
pub fn micro_solve(ops: &MicroOperators, prev: &MicroState, theta_a: f64, lagged: &[f64]) -> Result<MicroState> {
    let rest = ops.heat_remainder(prev, lagged)?;
    let theta = ops.temperature(theta_a, &rest);
    let w = ops.displacement(&theta)?;
    Ok(ops.state(theta, w))
}

/// Largest deviation of the interface trace from `theta_a`.
pub fn trace_defect(space: &MicroSpace, state: &MicroState, theta_a: f64) -> f64 {
    space
        .boundary
        .iter()
        .zip(&state.theta)
        .filter(|(b, _)| **b)
        .map(|(_, t)| (t - theta_a).abs())
        .fold(0.0, f64::max)
}
