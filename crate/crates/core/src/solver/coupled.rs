//! The coupled bidomain operator
//!
//! ```text
//! M = [ Σ_i + Σ_e    Σ_i ]
//!     [ −εΔt Σ_e     Λ   ]
//! ```
//!
//! acting on `(u_e, v)`, and its solvers.
//!
//! `M` is nonsymmetric, but it factors as `M = T S` with the symmetric
//! positive semidefinite
//!
//! ```text
//! S = [ ε(Σ_i + Σ_e)   εΣ_i          ]      T = [ I/ε    0   ]
//!     [ εΣ_i           Λ/Δt + εΣ_i   ]          [ −ΔtI   ΔtI ]
//! ```
//!
//! When `Γ_D = ∅` the kernel of `S` is spanned by the primal and the dual
//! indicator vectors in the `u_e` block. Fixing one primal and one dual `u_e`
//! entry makes `S` definite; a sparse `L D Lᵀ` factorization of the pinned
//! matrix, composed with `T⁻¹`, is the default (exact) right preconditioner
//! for GMRES on `M`.

use super::assembly::{assemble_stiffness, mass_diagonal, nullspace_basis};
use super::krylov::{gmres, Identity, Ilu0, Jacobi, Preconditioner, SolveInfo};
use super::ldl::LdlFactor;
use super::sparse::{CsrMatrix, LinearOperator};
use super::tensor::ConductivityTensors;
use crate::error::{DdfvError, Result};
use crate::mesh::Mesh;

/// The assembled coupled operator together with its blocks.
#[derive(Debug, Clone)]
pub struct CoupledOperator {
    /// Number of unknowns of one discrete function.
    pub n: usize,
    pub matrix: CsrMatrix,
    pub sigma_i: CsrMatrix,
    pub sigma_e: CsrMatrix,
    /// Diagonal of `Λ`.
    pub mass: Vec<f64>,
    pub epsilon: f64,
    pub dt: f64,
    /// Kernel of `M` (vectors of length `2n`, supported in the `u_e` block).
    pub nullspace: Vec<Vec<f64>>,
    /// Entries of the `u_e` block fixed to make `S` definite.
    pub pins: Vec<usize>,
}

/// Assemble `M` for the given tensors, scaling `ε` and time step `Δt`.
pub fn assemble_coupled(
    mesh: &Mesh,
    tensors: &ConductivityTensors,
    epsilon: f64,
    dt: f64,
) -> Result<CoupledOperator> {
    if !(dt > 0.0) || !(epsilon > 0.0) {
        return Err(DdfvError::Config(format!(
            "time step and scaling must be positive (dt = {dt}, epsilon = {epsilon})"
        )));
    }
    let sigma_i = assemble_stiffness(mesh, &tensors.intra)?;
    let sigma_e = assemble_stiffness(mesh, &tensors.extra)?;
    let mass = mass_diagonal(mesh);
    let n = mesh.n_unknowns();
    let a11 = CsrMatrix::linear_combination(1.0, &sigma_i, 1.0, &sigma_e);
    let a21 = sigma_e.scaled(-epsilon * dt);
    let lam = CsrMatrix::diagonal_matrix(&mass);
    let matrix = CsrMatrix::block2([[&a11, &sigma_i], [&a21, &lam]]);
    let nullspace = nullspace_basis(mesh)
        .into_iter()
        .map(|mut z| {
            z.resize(2 * n, 0.0);
            z
        })
        .collect();
    let pins = if mesh.has_dirichlet() {
        Vec::new()
    } else {
        let np = mesh.n_primal_unknowns();
        let mut p = vec![0];
        if np < n {
            p.push(np);
        }
        p
    };
    Ok(CoupledOperator {
        n,
        matrix,
        sigma_i,
        sigma_e,
        mass,
        epsilon,
        dt,
        nullspace,
        pins,
    })
}

impl CoupledOperator {
    /// `M x` computed block by block from `Σ_i`, `Σ_e` and `Λ`.
    pub fn apply_blockwise(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (ue, v) = x.split_at(n);
        let si_ue = self.sigma_i.mul_vec(ue);
        let se_ue = self.sigma_e.mul_vec(ue);
        let si_v = self.sigma_i.mul_vec(v);
        let mut y = vec![0.0; 2 * n];
        for j in 0..n {
            y[j] = si_ue[j] + se_ue[j] + si_v[j];
            y[n + j] = -self.epsilon * self.dt * se_ue[j] + self.mass[j] * v[j];
        }
        y
    }

    /// The symmetric matrix `S` (with `R/ε` added to its `v` block when a
    /// reaction matrix is given).
    pub fn symmetric(&self, reaction: Option<&CsrMatrix>) -> CsrMatrix {
        let eps = self.epsilon;
        let a11 = CsrMatrix::linear_combination(eps, &self.sigma_i, eps, &self.sigma_e);
        let a12 = self.sigma_i.scaled(eps);
        let lam =
            CsrMatrix::diagonal_matrix(&self.mass.iter().map(|m| m / self.dt).collect::<Vec<_>>());
        let mut a22 = CsrMatrix::linear_combination(1.0, &lam, eps, &self.sigma_i);
        if let Some(r) = reaction {
            a22 = CsrMatrix::linear_combination(1.0, &a22, 1.0 / eps, r);
        }
        CsrMatrix::block2([[&a11, &a12], [&a12, &a22]])
    }

    /// `T⁻¹ r`.
    pub fn apply_t_inverse(&self, r: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            out[j] = self.epsilon * r[j];
            out[n + j] = r[n + j] / self.dt + self.epsilon * r[j];
        }
    }
}

impl LinearOperator for CoupledOperator {
    fn nrows(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.apply(x, y)
    }
}

/// An `L D Lᵀ` factorization of a symmetric matrix whose `pins` rows and
/// columns are replaced by the identity. Solving with it sets the pinned
/// entries to zero.
#[derive(Debug, Clone)]
pub struct PinnedFactor {
    factor: LdlFactor,
    pins: Vec<usize>,
}

impl PinnedFactor {
    pub fn new(a: &CsrMatrix, pins: &[usize]) -> Result<Self> {
        let factor = LdlFactor::factor(&a.pinned(pins))?;
        Ok(Self {
            factor,
            pins: pins.to_vec(),
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        for &p in &self.pins {
            b[p] = 0.0;
        }
        self.factor.solve_in_place(b, work);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, &mut Vec::new());
        x
    }

    pub fn factor(&self) -> &LdlFactor {
        &self.factor
    }
}

struct Factorized {
    factor: PinnedFactor,
    n: usize,
    epsilon: f64,
    dt: f64,
}

impl Preconditioner for Factorized {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            z[j] = self.epsilon * r[j];
            z[n + j] = r[n + j] / self.dt + self.epsilon * r[j];
        }
        let mut work = Vec::with_capacity(2 * n);
        self.factor.solve_in_place(z, &mut work);
    }
}

/// Right preconditioners for GMRES on the coupled operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoupledPreconditioner {
    None,
    Jacobi,
    /// Incomplete LU of `M`; zero pivots (degenerate volumes have no mass) are
    /// replaced by the row scale.
    Ilu0,
    /// Exact: pinned factorization of `S` composed with `T⁻¹`.
    #[default]
    Factorized,
}

/// GMRES on the coupled operator with a preconditioner built once.
pub struct CoupledSolver {
    op: CoupledOperator,
    precond: Box<dyn Preconditioner>,
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl CoupledSolver {
    pub fn new(op: CoupledOperator, kind: CoupledPreconditioner, tol: f64) -> Result<Self> {
        let precond: Box<dyn Preconditioner> = match kind {
            CoupledPreconditioner::None => Box::new(Identity),
            CoupledPreconditioner::Jacobi => Box::new(Jacobi::new(&op.matrix)),
            CoupledPreconditioner::Ilu0 => Box::new(Ilu0::new(&op.matrix)),
            CoupledPreconditioner::Factorized => Box::new(Factorized {
                factor: PinnedFactor::new(&op.symmetric(None), &op.pins)?,
                n: op.n,
                epsilon: op.epsilon,
                dt: op.dt,
            }),
        };
        Ok(Self {
            op,
            precond,
            tol,
            restart: 40,
            max_iter: 2000,
        })
    }

    pub fn operator(&self) -> &CoupledOperator {
        &self.op
    }

    /// Solve `M x = rhs` to relative residual `tol`, starting from `x0`.
    pub fn solve(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveInfo)> {
        if rhs.len() != 2 * self.op.n {
            return Err(DdfvError::Mismatch(format!(
                "right-hand side has {} entries, expected {}",
                rhs.len(),
                2 * self.op.n
            )));
        }
        gmres(
            &self.op,
            rhs,
            x0,
            self.tol,
            self.restart,
            self.max_iter,
            self.precond.as_ref(),
        )
    }
}

/// Solve `M x = rhs` with the default (factorized) preconditioner.
///
/// With `Γ_D = ∅` the `u_e` block is determined up to the kernel of `M`;
/// callers normalize it afterwards.
pub fn solve_coupled(op: &CoupledOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let solver = CoupledSolver::new(op.clone(), CoupledPreconditioner::Factorized, tol)?;
    Ok(solver.solve(rhs, None)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured;

    #[test]
    fn matrix_is_t_times_s() {
        let m = structured(2, 2).unwrap();
        let t = ConductivityTensors::fibres((1.0, 0.2), (1.0, 0.5)).unwrap();
        let op = assemble_coupled(&m, &t, 0.02, 0.01).unwrap();
        let s = op.symmetric(None);
        let n = op.n;
        let x: Vec<f64> = (0..2 * n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let sx = s.mul_vec(&x);
        let mx = op.matrix.mul_vec(&x);
        for j in 0..n {
            let t1 = sx[j] / op.epsilon;
            let t2 = op.dt * (sx[n + j] - sx[j]);
            assert!((t1 - mx[j]).abs() < 1e-9 * (1.0 + mx[j].abs()));
            assert!((t2 - mx[n + j]).abs() < 1e-9 * (1.0 + mx[n + j].abs()));
        }
    }
}
