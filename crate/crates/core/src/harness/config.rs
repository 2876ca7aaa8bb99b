//! Experiment configuration (TOML) and problem setup: conductivities, the
//! stimulus current and the scheme configuration of a run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{project_mean, DiscreteFunction};
use crate::error::{DdfvError, Result};
use crate::geometry::{dist, Point};
use crate::ionic::IonicModel;
use crate::mesh::{read_mesh, structured, Mesh};
use crate::schemes::{SchemeConfig, SchemeKind, Source};
use crate::solver::{ConductivityTensors, CoupledPreconditioner};

/// Longitudinal and transverse conductivities of both media.
///
/// The tensors are `scale · Diag(λ^l, λ^t[, λ^t])`; the default ratios are
/// 9 (intracellular) and 2 (extracellular).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Conductivity {
    pub intra_longitudinal: f64,
    pub intra_transverse: f64,
    pub extra_longitudinal: f64,
    pub extra_transverse: f64,
    /// Common factor applied to all four values.
    pub scale: f64,
}

impl Default for Conductivity {
    fn default() -> Self {
        Self {
            intra_longitudinal: 1.0,
            intra_transverse: 1.0 / 9.0,
            extra_longitudinal: 1.0,
            extra_transverse: 0.5,
            scale: DEFAULT_CONDUCTIVITY_SCALE,
        }
    }
}

/// Default common conductivity factor. With unit longitudinal values the
/// wave does not propagate on the coarse levels of a desk-scale ladder; below
/// about 6 the coarsest 2D level is not fully activated by `T = 3`, and larger
/// values widen the front so that the time-discretization error dominates the
/// activation-time errors of the ladder.
pub const DEFAULT_CONDUCTIVITY_SCALE: f64 = 7.0;

impl Conductivity {
    /// Longitudinal/transverse ratios `(intra, extra)`.
    pub fn ratios(&self) -> (f64, f64) {
        (
            self.intra_longitudinal / self.intra_transverse,
            self.extra_longitudinal / self.extra_transverse,
        )
    }
}

/// Applied current `amplitude` on the ball `|x − center| < radius` during `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stimulus {
    pub amplitude: f64,
    pub start: f64,
    pub end: f64,
    pub radius: f64,
    /// Center of the ball; the center of the domain when absent.
    pub center: Option<[f64; 3]>,
}

impl Default for Stimulus {
    fn default() -> Self {
        Self {
            amplitude: 0.9,
            start: 1.0,
            end: 1.1,
            radius: 0.1,
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerChoice {
    None,
    Jacobi,
    Ilu0,
    #[default]
    Factorized,
}

impl From<PreconditionerChoice> for CoupledPreconditioner {
    fn from(p: PreconditionerChoice) -> Self {
        match p {
            PreconditionerChoice::None => CoupledPreconditioner::None,
            PreconditionerChoice::Jacobi => CoupledPreconditioner::Jacobi,
            PreconditionerChoice::Ilu0 => CoupledPreconditioner::Ilu0,
            PreconditionerChoice::Factorized => CoupledPreconditioner::Factorized,
        }
    }
}

/// Everything needed to run the propagation experiment on one mesh or on a
/// ladder of meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// Subdivisions per axis of the structured mesh (coarsest level of a study).
    pub level: usize,
    /// A mesh file used instead of the structured mesh (single runs only).
    pub mesh_file: Option<PathBuf>,
    pub scheme: SchemeKind,
    pub epsilon: f64,
    pub alpha: f64,
    pub conductivity: Conductivity,
    pub stimulus: Stimulus,
    /// Time step on the coarsest level; halved at each refinement.
    pub dt0: f64,
    pub t_final: f64,
    pub record_dt: f64,
    pub threshold: f64,
    /// Times at which `v` and `u_e` are compared and written.
    pub snapshots: Vec<f64>,
    /// Ellipticity bound `γ` the tensors are checked against.
    pub gamma: f64,
    pub preconditioner: PreconditionerChoice,
    /// Write the coupled matrix in MatrixMarket format.
    pub dump_matrix: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            level: 13,
            mesh_file: None,
            scheme: SchemeKind::SemiImplicit,
            epsilon: 1.0 / 50.0,
            alpha: 0.2,
            conductivity: Conductivity::default(),
            stimulus: Stimulus::default(),
            dt0: 0.02,
            t_final: 3.0,
            record_dt: 0.01,
            threshold: 0.9,
            snapshots: vec![1.2, 1.6, 2.2],
            gamma: 1000.0,
            preconditioner: PreconditionerChoice::Factorized,
            dump_matrix: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| DdfvError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DdfvError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(DdfvError::Config(what.to_string()));
        if self.dim != 2 && self.dim != 3 {
            return bad("dim must be 2 or 3");
        }
        if self.level == 0 && self.mesh_file.is_none() {
            return bad("level must be at least 1");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.dt0 > 0.0 && self.record_dt > 0.0 && self.t_final >= 0.0) {
            return bad("dt0 and record_dt must be positive and t_final nonnegative");
        }
        if !(self.stimulus.radius > 0.0 && self.stimulus.end >= self.stimulus.start) {
            return bad("stimulus needs a positive radius and end >= start");
        }
        if self.snapshots.iter().any(|&t| t < 0.0 || t > self.t_final) {
            return bad("snapshot times must lie in [0, t_final]");
        }
        Ok(())
    }

    /// Start of the monotonicity check of the activated region: one stimulus
    /// duration after the stimulus ends.
    pub fn monitor_start(&self) -> f64 {
        self.stimulus.end + (self.stimulus.end - self.stimulus.start)
    }

    /// Time step of refinement `k` of the ladder (`k = 0` is the coarsest).
    pub fn dt_for(&self, k: usize) -> f64 {
        self.dt0 / f64::powi(2.0, k as i32)
    }

    /// The mesh of a single run.
    pub fn mesh(&self) -> Result<Mesh> {
        match &self.mesh_file {
            Some(p) => read_mesh(p),
            None => structured(self.dim, self.level),
        }
    }

    pub fn tensors(&self) -> Result<ConductivityTensors> {
        make_tensors(&self.conductivity)
    }

    /// Scheme configuration with the stimulus as source.
    pub fn scheme_config(&self, mesh: &Mesh, dt: f64) -> Result<SchemeConfig> {
        let tensors = self.tensors()?;
        tensors.validate(mesh.dim(), mesh.diamonds.len(), self.gamma)?;
        let mut c = SchemeConfig::new(
            self.scheme,
            self.epsilon,
            dt,
            IonicModel::cubic(self.alpha),
            tensors,
        )
        .with_source(stimulus_source(mesh, &self.stimulus));
        c.preconditioner = self.preconditioner.into();
        Ok(c)
    }
}

/// `M_i = s·Diag(λ_i^l, λ_i^t, λ_i^t)` and likewise `M_e`, uniform in space.
pub fn make_tensors(c: &Conductivity) -> Result<ConductivityTensors> {
    if !(c.scale > 0.0) {
        return Err(DdfvError::Config(format!(
            "conductivity scale must be positive, got {}",
            c.scale
        )));
    }
    ConductivityTensors::fibres(
        (c.scale * c.intra_longitudinal, c.scale * c.intra_transverse),
        (c.scale * c.extra_longitudinal, c.scale * c.extra_transverse),
    )
}

fn domain_center(mesh: &Mesh) -> Point {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for k in 0..mesh.dim() {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut c = [0.0; 3];
    for k in 0..mesh.dim() {
        c[k] = 0.5 * (lo[k] + hi[k]);
    }
    c
}

/// The stimulus as a source term: the mean-value projection of the ball
/// indicator, times the amplitude, times the fraction of `(t0, t1)` covered by
/// the stimulation window.
pub fn stimulus_source(mesh: &Mesh, s: &Stimulus) -> Source {
    let center = s.center.unwrap_or_else(|| domain_center(mesh));
    let radius = s.radius;
    let shape = project_mean(mesh, &|p| if dist(p, center) < radius { 1.0 } else { 0.0 });
    let (amp, start, end) = (s.amplitude, s.start, s.end);
    Arc::new(move |t0: f64, t1: f64| -> DiscreteFunction {
        let overlap = (t1.min(end) - t0.max(start)).max(0.0);
        let frac = if t1 > t0 { overlap / (t1 - t0) } else { 0.0 };
        shape.scaled(amp * frac)
    })
}
