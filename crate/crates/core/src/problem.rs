//! Physical setup shared by the two-scale and the ε-resolved solvers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cell::{CellDomain, Quantizer};
use crate::effective::{EffectiveOptions, Interpretation};
use crate::fem::SolverOptions;
use crate::kinematics::{MaterialParams, Sources, Transformation};
use crate::tensor::Vec3;

/// Initial temperature `mean + amplitude · Π_a cos(k_a π x_a)`; compatible
/// with homogeneous Neumann conditions on the unit square/cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialTemperature {
    pub mean: f64,
    pub amplitude: f64,
    pub modes: [u32; 3],
}

impl InitialTemperature {
    pub fn constant(value: f64) -> Self {
        InitialTemperature {
            mean: value,
            amplitude: 0.0,
            modes: [0; 3],
        }
    }

    pub fn eval(&self, x: &Vec3, dim: usize) -> f64 {
        let mut p = 1.0;
        for a in 0..dim {
            p *= (self.modes[a] as f64 * PI * x[a]).cos();
        }
        self.mean + self.amplitude * p
    }
}

/// Time stepping and coupling controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingOptions {
    pub interpretation: Interpretation,
    pub latent_heat_in_weff: bool,
    /// Sign of the interface heat term on the left of the heat balance.
    pub latent_sign: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub solver: SolverOptions,
    /// Overrides of the coefficient-cache quantization; `None` uses the time
    /// step and the macro element size.
    pub cache_time_step: Option<f64>,
    pub cache_space_step: Option<f64>,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            interpretation: Interpretation::Literal,
            latent_heat_in_weff: true,
            latent_sign: 1.0,
            fixed_point_tol: 1e-8,
            fixed_point_max_iter: 50,
            solver: SolverOptions::default(),
            cache_time_step: None,
            cache_space_step: None,
        }
    }
}

impl CouplingOptions {
    pub fn effective(&self) -> EffectiveOptions {
        EffectiveOptions {
            interpretation: self.interpretation,
            latent_heat_in_weff: self.latent_heat_in_weff,
            solver: self.solver,
        }
    }
}

/// Everything needed to run either solver on the unit square/cube.
#[derive(Clone, Debug)]
pub struct Problem {
    pub cell: Arc<CellDomain>,
    pub transformation: Transformation,
    pub material: MaterialParams,
    pub sources: Sources,
    pub initial: InitialTemperature,
    pub t_end: f64,
    /// Requested step; the used step is `t_end / n_steps()`.
    pub dt: f64,
    pub coupling: CouplingOptions,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    /// `ceil(t_end / dt)`, zero for `t_end = 0`.
    pub fn n_steps(&self) -> usize {
        if self.t_end <= 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }

    pub fn step_size(&self) -> f64 {
        match self.n_steps() {
            0 => self.dt,
            n => self.t_end / n as f64,
        }
    }

    pub fn time(&self, step: usize) -> f64 {
        if step == self.n_steps() {
            self.t_end
        } else {
            step as f64 * self.step_size()
        }
    }

    /// Sample quantization for coefficient caches: coordinates the data does
    /// not depend on collapse, the others snap to `step_size()` in time and
    /// `space_step` in space, unless the coupling options override the steps.
    pub fn quantizer(&self, space_step: f64) -> Quantizer {
        let tr = &self.transformation;
        let c = &self.coupling;
        Quantizer {
            time_step: if tr.is_static() && self.sources.is_constant() {
                0.0
            } else {
                c.cache_time_step.unwrap_or(self.step_size())
            },
            space_step: if tr.depends_on_macro_point() || self.sources.depends_on_position() {
                c.cache_space_step.unwrap_or(space_step)
            } else {
                0.0
            },
        }
    }

    /// True when temperature does not depend on the deformation.
    pub fn heat_ignores_mechanics(&self) -> bool {
        self.material.matrix.dissipation == 0.0 && self.material.inclusion.dissipation == 0.0
    }
}
