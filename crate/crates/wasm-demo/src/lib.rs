//! WebAssembly bindings for a small interactive page: a 2D excitation wave
//! stepped in the browser, a duality check and mesh regularity metrics.
//!
//! Every binding has a plain-Rust counterpart returning [`ddfv::Result`], so
//! the crate builds and is tested natively as well.

use wasm_bindgen::prelude::*;

use ddfv::calculus::{duality_residual, DiscreteFunction};
use ddfv::harness::{nodal_values, ExperimentConfig, SimplicialOverlay};
use ddfv::mesh::{regularity_report, structured};
use ddfv::schemes::{SchemeState, Stepper};
use ddfv::{DdfvError, Mesh, Result};

fn js(e: DdfvError) -> JsError {
    JsError::new(&e.to_string())
}

/// The propagation experiment on the unit square, advanced on demand.
#[wasm_bindgen]
pub struct Propagation {
    config: ExperimentConfig,
    mesh: Mesh,
    overlay: SimplicialOverlay,
    state: SchemeState,
    dt: f64,
}

impl Propagation {
    pub fn create(level: usize, scale: f64) -> Result<Self> {
        let mut config = ExperimentConfig {
            level,
            ..ExperimentConfig::default()
        };
        config.conductivity.scale = scale;
        config.validate()?;
        let mesh = config.mesh()?;
        let overlay = SimplicialOverlay::new(&mesh);
        let state = SchemeState::initial(&mesh, DiscreteFunction::zeros(&mesh))?;
        // the time step of the ladder level closest to this mesh
        let dt = config.dt0 * 13.0 / level.max(13) as f64;
        Ok(Self {
            config,
            mesh,
            overlay,
            state,
            dt,
        })
    }

    pub fn try_advance(&mut self, steps: usize) -> Result<f64> {
        let stepper = Stepper::new(&self.mesh, self.config.scheme_config(&self.mesh, self.dt)?)?;
        for _ in 0..steps {
            self.state = stepper.step(&self.state)?;
        }
        Ok(self.state.time)
    }
}

#[wasm_bindgen]
impl Propagation {
    /// A structured mesh with `level` subdivisions per side and conductivities
    /// multiplied by `scale`.
    #[wasm_bindgen(constructor)]
    pub fn new(level: usize, scale: f64) -> std::result::Result<Propagation, JsError> {
        Self::create(level, scale).map_err(js)
    }

    /// Advance `steps` semi-implicit steps; returns the new time.
    pub fn advance(&mut self, steps: usize) -> std::result::Result<f64, JsError> {
        self.try_advance(steps).map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    /// Node coordinates `x0, y0, x1, y1, …` of the simplicial overlay.
    pub fn points(&self) -> Vec<f64> {
        self.overlay
            .nodes
            .iter()
            .flat_map(|p| [p[0], p[1]])
            .collect()
    }

    /// Node triples of the overlay triangles.
    pub fn triangles(&self) -> Vec<u32> {
        self.overlay
            .simplices
            .iter()
            .flat_map(|s| [s[0] as u32, s[1] as u32, s[2] as u32])
            .collect()
    }

    /// Transmembrane potential at the overlay nodes.
    pub fn potential(&self) -> Vec<f64> {
        nodal_values(&self.mesh, &self.state.v, None)
    }

    /// Fraction of nodes at or above the activation threshold.
    pub fn active_fraction(&self) -> f64 {
        let v = self.potential();
        v.iter().filter(|&&x| x >= self.config.threshold).count() as f64 / v.len() as f64
    }
}

pub fn duality(dim: usize, level: usize, trials: usize) -> Result<f64> {
    duality_residual(&structured(dim, level)?, trials, 1)
}

pub fn report(dim: usize, level: usize) -> Result<String> {
    let mesh = structured(dim, level)?;
    Ok(format!(
        "cells {}  vertices {}  unknowns {}\n{}",
        mesh.n_cells(),
        mesh.n_vertices(),
        mesh.n_unknowns(),
        regularity_report(&mesh)
    ))
}

/// Worst relative residual of the discrete duality over random data.
#[wasm_bindgen]
pub fn duality_check(dim: usize, level: usize, trials: usize) -> std::result::Result<f64, JsError> {
    duality(dim, level, trials).map_err(js)
}

/// Counts and regularity metrics of a structured mesh.
#[wasm_bindgen]
pub fn mesh_report(dim: usize, level: usize) -> std::result::Result<String, JsError> {
    report(dim, level).map_err(js)
}
