//! Run configuration: a sectioned TOML file with every key optional.
//!
//! Missing keys take the documented defaults (see `docs/config.md`), which
//! together form the standard test configuration: a 2-D cell with a
//! circular inclusion of radius 0.25, radial growth `g(t) = 0.1 t`, fully
//! coupled material data, `T = 0.5` and `dt = 0.05`. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cell::CellDomain;
use crate::effective::Interpretation;
use crate::error::{Error, Result};
use crate::fem::SolverOptions;
use crate::kinematics::{
    Amplitude, Family, MaterialParams, PhaseMaterial, ScalarSource, Sources, TabulatedMotion, TimeSeries,
    Transformation, VectorSource,
};
use crate::mesh::{build_cell_mesh, read_mesh, CellMesh};
use crate::problem::{CouplingOptions, InitialTemperature, Problem};
use crate::tensor::Vec3;
use crate::twoscale::TwoScaleOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub dimension: usize,
    pub radius: f64,
    /// Intervals per axis of the structured cell mesh.
    pub cell_resolution: usize,
    /// Plain-text cell mesh replacing the generated one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            dimension: 2,
            radius: 0.25,
            cell_resolution: 16,
            mesh_file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Identity,
    RadialGrowth,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformationConfig {
    pub family: FamilyName,
    /// Growth rate of the radial family, `g(t, x) = t (rate + slope · (x − ½))`.
    pub rate: f64,
    pub slope: Vec<f64>,
    /// Required gap between the moving region and the cell boundary.
    pub margin: f64,
    /// Motion table for the tabulated family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Lattice points per axis of the admissibility sampling.
    pub admissibility_grid: usize,
}

impl Default for TransformationConfig {
    fn default() -> Self {
        TransformationConfig {
            family: FamilyName::RadialGrowth,
            rate: 0.1,
            slope: Vec::new(),
            margin: 0.1,
            table: None,
            admissibility_grid: 32,
        }
    }
}

/// Isotropic phase data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseConfig {
    pub lambda: f64,
    pub mu: f64,
    pub conductivity: f64,
    pub expansion: f64,
    pub dissipation: f64,
    pub density: f64,
    pub heat_capacity: f64,
}

impl PhaseConfig {
    fn matrix() -> Self {
        PhaseConfig {
            lambda: 1.0,
            mu: 1.0,
            conductivity: 1.0,
            expansion: 0.2,
            dissipation: 0.1,
            density: 1.0,
            heat_capacity: 1.0,
        }
    }

    fn inclusion() -> Self {
        PhaseConfig {
            lambda: 2.0,
            mu: 2.0,
            conductivity: 0.5,
            expansion: 0.1,
            dissipation: 0.05,
            density: 1.0,
            heat_capacity: 1.0,
        }
    }

    fn material(&self, dim: usize) -> PhaseMaterial {
        let mut m = PhaseMaterial::isotropic(dim, self.lambda, self.mu, self.conductivity);
        m.expansion = self.expansion;
        m.dissipation = self.dissipation;
        m.density = self.density;
        m.heat_capacity = self.heat_capacity;
        m
    }
}

/// A phase section as written; missing keys keep the phase's own defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasePatch {
    lambda: Option<f64>,
    mu: Option<f64>,
    conductivity: Option<f64>,
    expansion: Option<f64>,
    dissipation: Option<f64>,
    density: Option<f64>,
    heat_capacity: Option<f64>,
}

impl PhasePatch {
    fn apply(self, mut p: PhaseConfig) -> PhaseConfig {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.lambda, self.lambda);
        set(&mut p.mu, self.mu);
        set(&mut p.conductivity, self.conductivity);
        set(&mut p.expansion, self.expansion);
        set(&mut p.dissipation, self.dissipation);
        set(&mut p.density, self.density);
        set(&mut p.heat_capacity, self.heat_capacity);
        p
    }
}

fn matrix_section<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<PhaseConfig, D::Error> {
    Ok(PhasePatch::deserialize(d)?.apply(PhaseConfig::matrix()))
}

fn inclusion_section<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<PhaseConfig, D::Error> {
    Ok(PhasePatch::deserialize(d)?.apply(PhaseConfig::inclusion()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterfaceConfig {
    pub surface_tension: f64,
    pub latent_heat: f64,
}

impl Default for InterfaceConfig {
    fn default() -> Self {
        InterfaceConfig {
            surface_tension: 0.1,
            latent_heat: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_end: 0.5, dt: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub mean: f64,
    pub amplitude: f64,
    /// Cosine mode numbers per axis.
    pub modes: Vec<u32>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            mean: 1.0,
            amplitude: 0.5,
            modes: vec![1, 0],
        }
    }
}

/// A constant or a piecewise-linear table in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Constant(f64),
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl Default for ScalarSpec {
    fn default() -> Self {
        ScalarSpec::Constant(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesConfig {
    pub heat_matrix: ScalarSpec,
    pub heat_inclusion: ScalarSpec,
    pub force_matrix: Vec<f64>,
    pub force_inclusion: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Systems up to this size are factorized densely.
    pub dense_below: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        let c = CouplingOptions::default();
        SolverConfig {
            cg_tol: s.tol,
            cg_max_iter: s.max_iter,
            dense_below: s.dense_below,
            fixed_point_tol: c.fixed_point_tol,
            fixed_point_max_iter: c.fixed_point_max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpretationName {
    Literal,
    WeakForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub interpretation: InterpretationName,
    pub latent_heat_in_weff: bool,
    /// Sign of the interface heat term; `1` or `-1`.
    pub latent_sign: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_time_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_space_step: Option<f64>,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            interpretation: InterpretationName::Literal,
            latent_heat_in_weff: true,
            latent_sign: 1.0,
            cache_time_step: None,
            cache_space_step: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroConfig {
    pub resolution: usize,
    /// One micro problem per macro element instead of per quadrature point.
    pub micro_decimation: bool,
    /// VTK snapshot interval in steps; zero writes only the final state.
    pub snapshot_every: usize,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig {
            resolution: 8,
            micro_decimation: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveConfig {
    /// Tabulation times; empty means `0` and `t_end`.
    pub times: Vec<f64>,
    /// Macro sample points per axis, at cell centres of a uniform grid.
    pub points_per_axis: usize,
    pub check_tol: f64,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            times: Vec::new(),
            points_per_axis: 1,
            check_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    pub time: f64,
    /// Macro point of the corrector solve; empty means the domain centre.
    pub point: Vec<f64>,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            time: 0.0,
            point: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Cell sizes of the ε-resolved runs; each must be `1/k`.
    pub eps: Vec<f64>,
    /// Cell sizes of the operator checks.
    pub check_eps: Vec<f64>,
    /// Times of the operator checks; empty means `0`, `t_end/2`, `t_end`.
    pub check_times: Vec<f64>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            eps: vec![0.5, 0.25, 0.125],
            check_eps: vec![0.5, 0.25],
            check_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
        }
    }
}

/// Complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub transformation: TransformationConfig,
    #[serde(deserialize_with = "matrix_section")]
    pub matrix: PhaseConfig,
    #[serde(deserialize_with = "inclusion_section")]
    pub inclusion: PhaseConfig,
    pub interface: InterfaceConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    pub sources: SourcesConfig,
    pub solver: SolverConfig,
    pub coupling: CouplingConfig,
    #[serde(rename = "macro")]
    pub macro_: MacroConfig,
    pub effective: EffectiveConfig,
    pub cell: CellConfig,
    pub reference: ReferenceConfig,
    pub output: OutputConfig,
    /// Directory against which relative paths are resolved; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: GeometryConfig::default(),
            transformation: TransformationConfig::default(),
            matrix: PhaseConfig::matrix(),
            inclusion: PhaseConfig::inclusion(),
            interface: InterfaceConfig::default(),
            time: TimeConfig::default(),
            initial: InitialConfig::default(),
            sources: SourcesConfig::default(),
            solver: SolverConfig::default(),
            coupling: CouplingConfig::default(),
            macro_: MacroConfig::default(),
            effective: EffectiveConfig::default(),
            cell: CellConfig::default(),
            reference: ReferenceConfig::default(),
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn vector(field: &str, v: &[f64], dim: usize) -> Result<Vec3> {
    let mut out = Vec3::zeros();
    match v.len() {
        0 => Ok(out),
        n if n == dim => {
            for (a, x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(invalid(field, "entries must be finite"));
                }
                out[a] = *x;
            }
            Ok(out)
        }
        n => Err(invalid(field, format!("expected {dim} entries, got {n}"))),
    }
}

fn scalar_source(field: &str, spec: &ScalarSpec) -> Result<ScalarSource> {
    match spec {
        ScalarSpec::Constant(v) if v.is_finite() => Ok(ScalarSource::Constant(*v)),
        ScalarSpec::Constant(_) => Err(invalid(field, "must be finite")),
        ScalarSpec::Table { times, values } => {
            if times.is_empty() || times.len() != values.len() {
                return Err(invalid(field, "times and values must be non-empty and of equal length"));
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid(field, "times must increase strictly"));
            }
            if times.iter().chain(values).any(|v| !v.is_finite()) {
                return Err(invalid(field, "entries must be finite"));
            }
            Ok(ScalarSource::Series(TimeSeries {
                times: times.clone(),
                values: values.clone(),
            }))
        }
    }
}

impl RunConfig {
    /// Parses and validates configuration text; relative paths resolve
    /// against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigSyntax {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    /// The configuration with every default filled in, as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical echo; equal for files differing only in
    /// layout, comments or spelled-out defaults.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dimension
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if !(dim == 2 || dim == 3) {
            return Err(invalid("geometry.dimension", format!("must be 2 or 3, got {dim}")));
        }
        let g = &self.geometry;
        positive("geometry.radius", g.radius)?;
        if g.cell_resolution < 2 {
            return Err(invalid("geometry.cell_resolution", "must be at least 2"));
        }
        let tr = &self.transformation;
        non_negative("transformation.margin", tr.margin)?;
        let outer = 0.5 - 0.5 * tr.margin;
        if g.mesh_file.is_none() && !(g.radius < outer) {
            return Err(invalid(
                "geometry.radius",
                format!("{} does not respect the boundary margin {} (must be below {outer})", g.radius, tr.margin),
            ));
        }
        if !tr.rate.is_finite() {
            return Err(invalid("transformation.rate", "must be finite"));
        }
        vector("transformation.slope", &tr.slope, dim)?;
        if tr.family == FamilyName::Tabulated && tr.table.is_none() {
            return Err(invalid("transformation.table", "required by the tabulated family"));
        }
        if tr.admissibility_grid < 2 {
            return Err(invalid("transformation.admissibility_grid", "must be at least 2"));
        }
        for (name, p) in [("matrix", &self.matrix), ("inclusion", &self.inclusion)] {
            for (key, v) in [("conductivity", p.conductivity), ("mu", p.mu), ("density", p.density), ("heat_capacity", p.heat_capacity)] {
                positive(&format!("{name}.{key}"), v)?;
            }
            for (key, v) in [("expansion", p.expansion), ("dissipation", p.dissipation)] {
                non_negative(&format!("{name}.{key}"), v)?;
            }
            if !(p.lambda.is_finite() && dim as f64 * p.lambda + 2.0 * p.mu > 0.0) {
                return Err(invalid(&format!("{name}.lambda"), "stiffness must be positive definite"));
            }
        }
        non_negative("interface.surface_tension", self.interface.surface_tension)?;
        if !self.interface.latent_heat.is_finite() {
            return Err(invalid("interface.latent_heat", "must be finite"));
        }
        let t = &self.time;
        non_negative("time.t_end", t.t_end)?;
        positive("time.dt", t.dt)?;
        if t.dt > t.t_end && t.t_end > 0.0 {
            return Err(invalid("time.dt", format!("{} exceeds t_end = {}", t.dt, t.t_end)));
        }
        if !(self.initial.mean.is_finite() && self.initial.amplitude.is_finite()) {
            return Err(invalid("initial", "mean and amplitude must be finite"));
        }
        if self.initial.modes.len() > dim {
            return Err(invalid("initial.modes", format!("at most {dim} entries")));
        }
        self.sources()?;
        let s = &self.solver;
        positive("solver.cg_tol", s.cg_tol)?;
        positive("solver.fixed_point_tol", s.fixed_point_tol)?;
        if s.cg_max_iter == 0 {
            return Err(invalid("solver.cg_max_iter", "must be positive"));
        }
        if s.fixed_point_max_iter == 0 {
            return Err(invalid("solver.fixed_point_max_iter", "must be positive"));
        }
        let c = &self.coupling;
        if c.latent_sign.abs() != 1.0 {
            return Err(invalid("coupling.latent_sign", "must be 1 or -1"));
        }
        if let Some(h) = c.cache_time_step {
            non_negative("coupling.cache_time_step", h)?;
        }
        if let Some(h) = c.cache_space_step {
            non_negative("coupling.cache_space_step", h)?;
        }
        if self.macro_.resolution < 1 {
            return Err(invalid("macro.resolution", "must be positive"));
        }
        for tv in &self.effective.times {
            non_negative("effective.times", *tv)?;
        }
        if self.effective.points_per_axis < 1 {
            return Err(invalid("effective.points_per_axis", "must be positive"));
        }
        positive("effective.check_tol", self.effective.check_tol)?;
        non_negative("cell.time", self.cell.time)?;
        let x = vector("cell.point", &self.cell.point, dim)?;
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("cell.point", "must lie in the unit domain"));
        }
        for (field, list) in [("reference.eps", &self.reference.eps), ("reference.check_eps", &self.reference.check_eps)] {
            if list.is_empty() {
                return Err(invalid(field, "must not be empty"));
            }
            for &e in list.iter() {
                let k = (1.0 / e).round();
                if !(e > 0.0 && e <= 1.0 && (k * e - 1.0).abs() < 1e-12) {
                    return Err(invalid(field, format!("{e} is not the reciprocal of a positive integer")));
                }
            }
        }
        for tv in &self.reference.check_times {
            non_negative("reference.check_times", *tv)?;
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialParams> {
        let dim = self.dim();
        MaterialParams::new(
            dim,
            self.matrix.material(dim),
            self.inclusion.material(dim),
            self.interface.surface_tension,
            self.interface.latent_heat,
        )
    }

    pub fn sources(&self) -> Result<Sources> {
        let dim = self.dim();
        let s = &self.sources;
        Ok(Sources {
            heat: [
                scalar_source("sources.heat_matrix", &s.heat_matrix)?,
                scalar_source("sources.heat_inclusion", &s.heat_inclusion)?,
            ],
            force: [
                VectorSource::Constant(vector("sources.force_matrix", &s.force_matrix, dim)?),
                VectorSource::Constant(vector("sources.force_inclusion", &s.force_inclusion, dim)?),
            ],
        })
    }

    pub fn transformation(&self) -> Result<Transformation> {
        let dim = self.dim();
        let tr = &self.transformation;
        Ok(match tr.family {
            FamilyName::Identity => Transformation::identity(dim),
            FamilyName::RadialGrowth => {
                let amplitude = Amplitude {
                    rate: tr.rate,
                    slope: vector("transformation.slope", &tr.slope, dim)?,
                };
                Transformation::radial_growth(dim, self.geometry.radius, amplitude, tr.margin)?
            }
            FamilyName::Tabulated => {
                let path = self.resolve(tr.table.as_deref().expect("validated"));
                let motion = TabulatedMotion::load(&path)?;
                if motion.dim != dim {
                    return Err(invalid("transformation.table", format!("table is {}-dimensional", motion.dim)));
                }
                Transformation {
                    family: Family::Tabulated(motion),
                    dim,
                    det_bounds: (0.5, 2.0),
                    boundary_margin: tr.margin,
                }
            }
        })
    }

    pub fn cell_mesh(&self) -> Result<CellMesh> {
        let mesh = match &self.geometry.mesh_file {
            Some(p) => read_mesh(&self.resolve(p))?,
            None => build_cell_mesh(self.geometry.radius, self.geometry.cell_resolution, self.dim())?,
        };
        if mesh.dim() != self.dim() {
            return Err(invalid("geometry.mesh_file", format!("mesh is {}-dimensional", mesh.dim())));
        }
        Ok(mesh)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.cg_tol,
            max_iter: self.solver.cg_max_iter,
            dense_below: self.solver.dense_below,
        }
    }

    pub fn coupling_options(&self) -> CouplingOptions {
        let c = &self.coupling;
        CouplingOptions {
            interpretation: match c.interpretation {
                InterpretationName::Literal => Interpretation::Literal,
                InterpretationName::WeakForm => Interpretation::WeakForm,
            },
            latent_heat_in_weff: c.latent_heat_in_weff,
            latent_sign: c.latent_sign,
            fixed_point_tol: self.solver.fixed_point_tol,
            fixed_point_max_iter: self.solver.fixed_point_max_iter,
            solver: self.solver_options(),
            cache_time_step: c.cache_time_step,
            cache_space_step: c.cache_space_step,
        }
    }

    pub fn initial_temperature(&self) -> InitialTemperature {
        let mut modes = [0; 3];
        for (m, v) in modes.iter_mut().zip(&self.initial.modes) {
            *m = *v;
        }
        InitialTemperature {
            mean: self.initial.mean,
            amplitude: self.initial.amplitude,
            modes,
        }
    }

    /// The physical problem shared by all solvers.
    pub fn problem(&self) -> Result<Problem> {
        Ok(Problem {
            cell: Arc::new(CellDomain::new(self.cell_mesh()?)),
            transformation: self.transformation()?,
            material: self.material()?,
            sources: self.sources()?,
            initial: self.initial_temperature(),
            t_end: self.time.t_end,
            dt: self.time.dt,
            coupling: self.coupling_options(),
        })
    }

    pub fn two_scale_options(&self) -> TwoScaleOptions {
        TwoScaleOptions {
            macro_resolution: self.macro_.resolution,
            per_element_sites: self.macro_.micro_decimation,
        }
    }

    /// Tabulation times of the `effective` subcommand.
    pub fn effective_times(&self) -> Vec<f64> {
        if self.effective.times.is_empty() {
            if self.time.t_end > 0.0 {
                vec![0.0, self.time.t_end]
            } else {
                vec![0.0]
            }
        } else {
            self.effective.times.clone()
        }
    }

    /// Cell centres of a uniform grid with `points_per_axis` cells per axis.
    pub fn effective_points(&self) -> Vec<Vec3> {
        let n = self.effective.points_per_axis;
        let dim = self.dim();
        (0..n.pow(dim as u32))
            .map(|mut i| {
                let mut x = Vec3::zeros();
                for a in (0..dim).rev() {
                    x[a] = ((i % n) as f64 + 0.5) / n as f64;
                    i /= n;
                }
                x
            })
            .collect()
    }

    pub fn cell_point(&self) -> Vec3 {
        if self.cell.point.is_empty() {
            let mut x = Vec3::zeros();
            for a in 0..self.dim() {
                x[a] = 0.5;
            }
            x
        } else {
            vector("cell.point", &self.cell.point, self.dim()).expect("validated")
        }
    }

    pub fn check_times(&self) -> Vec<f64> {
        if self.reference.check_times.is_empty() {
            let t = self.time.t_end;
            if t > 0.0 {
                vec![0.0, 0.5 * t, t]
            } else {
                vec![0.0]
            }
        } else {
            self.reference.check_times.clone()
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    RunConfig::from_toml(&text, &base).map_err(|e| e.context(path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml(text, Path::new("."))
    }

    #[test]
    fn empty_file_gives_documented_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let echo = cfg.to_toml();
        assert_eq!(parse(&echo).unwrap(), cfg);
        assert!(echo.contains("radius = 0.25"));
        assert!(echo.contains("family = \"radial_growth\""));
        assert!(echo.contains("[macro]"));
    }

    #[test]
    fn partial_section_keeps_other_defaults() {
        let cfg = parse("[inclusion]\nconductivity = 3.0\n").unwrap();
        assert_eq!(cfg.inclusion.conductivity, 3.0);
        assert_eq!(cfg.inclusion.lambda, 2.0);
        assert_eq!(cfg.matrix, PhaseConfig::matrix());
    }

    #[test]
    fn negative_radius_names_the_field() {
        let err = parse("[geometry]\nradius = -0.1\n").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { field, .. } if field == "geometry.radius"), "{err}");
    }

    #[test]
    fn radius_must_respect_margin() {
        let err = parse("[geometry]\nradius = 0.46\n").unwrap_err();
        assert!(err.to_string().contains("margin"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        let err = parse("[time]\ndt = 0.1\n\n[geometry]\nradius = 0.2\nradios = 0.3\n").unwrap_err();
        match &err {
            Error::ConfigSyntax { line, message } => {
                assert_eq!(*line, 6);
                assert!(message.contains("radios"), "{message}");
            }
            other => panic!("{other}"),
        }
        assert!(parse("[nonsense]\n").is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse("[time]\nt_end = 1.0\ndt = = 2\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn step_longer_than_horizon_is_rejected() {
        let err = parse("[time]\nt_end = 0.1\ndt = 0.2\n").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { field, .. } if field == "time.dt"));
    }

    #[test]
    fn eps_must_tile_the_domain() {
        let err = parse("[reference]\neps = [0.3]\n").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { field, .. } if field == "reference.eps"));
    }

    #[test]
    fn tabulated_sources_and_vectors() {
        let cfg = parse(
            "[sources]\nheat_matrix = { times = [0.0, 1.0], values = [0.0, 2.0] }\nforce_inclusion = [1.0, 0.0]\n",
        )
        .unwrap();
        let s = cfg.sources().unwrap();
        let p = crate::kinematics::SourcePoint {
            t: 0.25,
            x: Vec3::zeros(),
            y: Vec3::zeros(),
        };
        assert_eq!(s.heat[0].eval(&p), 0.5);
        assert_eq!(s.force[1].eval(&p)[0], 1.0);
        let err = parse("[sources]\nforce_matrix = [1.0]\n").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { field, .. } if field == "sources.force_matrix"));
    }

    #[test]
    fn hash_ignores_layout() {
        let a = parse("[time]\ndt = 0.05\n").unwrap();
        let b = parse("# comment\n\n[time]\n  dt   =  5e-2\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), parse("[time]\ndt = 0.025\n").unwrap().hash());
    }

    #[test]
    fn default_problem_builds() {
        let mut cfg = RunConfig::default();
        cfg.geometry.cell_resolution = 4;
        let p = cfg.problem().unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.n_steps(), 10);
        assert_eq!(cfg.effective_points().len(), 1);
        assert_eq!(cfg.check_times(), vec![0.0, 0.25, 0.5]);
    }
}
