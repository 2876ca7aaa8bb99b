//! Sparse assembly of the mass, stiffness and coupled bidomain operators,
//! and the linear solvers used by the time-stepping schemes.
//!
//! Unknown vectors follow the flat layout of
//! [`DiscreteFunction::to_flat`](crate::calculus::DiscreteFunction::to_flat):
//! primal unknowns first, then dual unknowns. Coupled vectors stack the
//! extracellular potential `u_e` on top of the transmembrane potential `v`.

mod assembly;
mod coupled;
pub mod krylov;
pub mod ldl;
pub mod sparse;
mod tensor;

pub use assembly::{
    assemble_mass, assemble_reaction, assemble_stiffness, dirichlet_load, element_load,
    mass_diagonal, neumann_load, nullspace_basis,
};
pub use coupled::{
    assemble_coupled, solve_coupled, CoupledOperator, CoupledPreconditioner, CoupledSolver,
    PinnedFactor,
};
pub use krylov::{
    conjugate_gradient, deflate, gmres, Identity, Ilu0, Jacobi, Preconditioner, SolveInfo,
};
pub use ldl::LdlFactor;
pub use sparse::{CsrMatrix, LinearOperator};
pub use tensor::{symmetric_eigenvalues, ConductivityTensors, Tensor, TensorField};

use crate::error::Result;

/// Preconditioners available for [`solve_spd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpdPreconditioner {
    None,
    #[default]
    Jacobi,
    /// Incomplete factorization with the pattern of the matrix.
    Ilu0,
}

/// Default relative tolerance of SPD solves.
pub const SPD_TOLERANCE: f64 = 1e-10;
/// Default relative tolerance of coupled solves.
pub const COUPLED_TOLERANCE: f64 = 1e-8;

/// Solve a symmetric positive (semi)definite system by preconditioned
/// conjugate gradients.
///
/// For a singular matrix, `nullspace` must list mutually orthogonal vectors
/// spanning its kernel; the right-hand side is projected out of it and the
/// returned solution is orthogonal to it.
pub fn solve_spd(
    a: &CsrMatrix,
    rhs: &[f64],
    tol: f64,
    precond: SpdPreconditioner,
    nullspace: &[Vec<f64>],
) -> Result<(Vec<f64>, SolveInfo)> {
    let max_iter = 10 * a.nrows + 100;
    match precond {
        SpdPreconditioner::None => conjugate_gradient(a, rhs, tol, max_iter, &Identity, nullspace),
        SpdPreconditioner::Jacobi => {
            conjugate_gradient(a, rhs, tol, max_iter, &Jacobi::new(a), nullspace)
        }
        SpdPreconditioner::Ilu0 => {
            conjugate_gradient(a, rhs, tol, max_iter, &Ilu0::new(a), nullspace)
        }
    }
}
