//! The propagation experiment: configuration, activation maps, cross-mesh
//! projection, error metrics, convergence studies and file output.

mod activation;
mod config;
mod output;
mod overlay;
mod study;

pub use activation::{activation_time, complete_map, ActivationTracker};
pub use config::{
    make_tensors, stimulus_source, Conductivity, ExperimentConfig, PreconditionerChoice, Stimulus,
    DEFAULT_CONDUCTIVITY_SCALE,
};
pub use output::{read_csv, write_csv, write_vtk_elements, write_vtk_overlay, Table};
pub use overlay::{
    error_space, error_space_time, error_terms, nodal_values, project_between, NodalField,
    SimplicialOverlay, SpaceTimeError,
};
pub use study::{
    convergence_study, fit_order, run_experiment, ConvergenceReport, LevelResult, RunOutput,
};
