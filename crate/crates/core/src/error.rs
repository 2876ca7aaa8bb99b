use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum DdfvError {
    #[error("geometry error in cell {cell}: {reason}")]
    Geometry { cell: usize, reason: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{method} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver {
        method: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<DdfvError>,
    },

    #[error("point ({x:.6}, {y:.6}, {z:.6}) lies outside the mesh")]
    OutsideDomain { x: f64, y: f64, z: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("diagnostic failure at step {step}: {reason}")]
    Diagnostic { step: usize, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DdfvError>;

impl DdfvError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DdfvError::Io {
            path: path.into(),
            source,
        }
    }
}
