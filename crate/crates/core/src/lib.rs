//! Discrete duality finite volume (DDFV) solver for the bidomain model of
//! cardiac electrical activity.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] — the primal/dual/diamond mesh database, a structured mesh
//!   generator, mesh files and regularity metrics;
//! * [`calculus`] — discrete functions and fields, inner products, the
//!   discrete gradient and divergence, reconstruction and projections;
//! * [`ionic`] — the cubic ionic current and its discretization;
//! * [`solver`] — sparse assembly and linear solvers;
//! * [`schemes`] — the fully implicit, linearized implicit and semi-implicit
//!   time-stepping schemes;
//! * [`harness`] — experiment configuration, activation maps, cross-mesh
//!   projection, error metrics, convergence studies and file output.

pub mod calculus;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod ionic;
pub mod mesh;
pub mod schemes;
pub mod solver;

pub use error::{DdfvError, Result};
pub use mesh::Mesh;
