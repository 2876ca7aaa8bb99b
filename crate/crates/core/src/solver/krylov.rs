//! Krylov solvers and preconditioners.

use super::ldl::LdlFactor;
use super::sparse::{dot, norm2, CsrMatrix, LinearOperator};
use crate::error::{DdfvError, Result};

/// `z ≈ A⁻¹ r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning.
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling; zero diagonal entries are left unscaled.
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        Self {
            inv_diag: a
                .diagonal()
                .iter()
                .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of `A`.
///
/// Zero or tiny pivots (as produced by rows with a vanishing diagonal) are
/// replaced by the largest magnitude of their row.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.nrows;
        let mut lu = a.clone();
        let mut diag_pos = vec![usize::MAX; n];
        // make sure every row stores its diagonal
        let missing: Vec<usize> = (0..n)
            .filter(|&i| {
                a.indices[a.indptr[i]..a.indptr[i + 1]]
                    .binary_search(&i)
                    .is_err()
            })
            .collect();
        if !missing.is_empty() {
            let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + missing.len());
            for i in 0..n {
                trip.extend(a.row(i).map(|(j, v)| (i, j, v)));
            }
            trip.extend(missing.iter().map(|&i| (i, i, 0.0)));
            lu = CsrMatrix::from_triplets(n, n, &trip);
        }
        for (i, dp) in diag_pos.iter_mut().enumerate() {
            let r = lu.indptr[i]..lu.indptr[i + 1];
            *dp = r.start + lu.indices[r].binary_search(&i).unwrap();
        }
        let mut col_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for p in start..end {
                col_pos[lu.indices[p]] = p;
            }
            let row_scale = lu.data[start..end]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            for p in start..diag_pos[i] {
                let k = lu.indices[p];
                let piv = lu.data[diag_pos[k]];
                let lik = lu.data[p] / piv;
                lu.data[p] = lik;
                for q in diag_pos[k] + 1..lu.indptr[k + 1] {
                    let j = lu.indices[q];
                    let pos = col_pos[j];
                    if pos != usize::MAX {
                        lu.data[pos] -= lik * lu.data[q];
                    }
                }
            }
            let d = &mut lu.data[diag_pos[i]];
            if d.abs() <= 1e-12 * row_scale.max(f64::MIN_POSITIVE) {
                *d = if row_scale > 0.0 { row_scale } else { 1.0 };
            }
            for p in start..end {
                col_pos[lu.indices[p]] = usize::MAX;
            }
        }
        Self { lu, diag_pos }
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.nrows;
        for i in 0..n {
            let mut s = r[i];
            for p in lu.indptr[i]..self.diag_pos[i] {
                s -= lu.data[p] * z[lu.indices[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag_pos[i] + 1..lu.indptr[i + 1] {
                s -= lu.data[p] * z[lu.indices[p]];
            }
            z[i] = s / lu.data[self.diag_pos[i]];
        }
    }
}

impl Preconditioner for LdlFactor {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        let mut work = Vec::new();
        self.solve_in_place(z, &mut work);
    }
}

/// Remove the components along mutually orthogonal vectors.
pub fn deflate(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let bb = dot(b, b);
        if bb > 0.0 {
            let c = dot(x, b) / bb;
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite `A`.
///
/// `nullspace` lists mutually orthogonal vectors spanning the kernel of a
/// singular `A`; the right-hand side and the iterates are kept orthogonal to
/// them. Stops when `‖b − A x‖ ≤ tol ‖b‖`.
pub fn conjugate_gradient(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    precond: &dyn Preconditioner,
    nullspace: &[Vec<f64>],
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = b.len();
    let mut rhs = b.to_vec();
    deflate(&mut rhs, nullspace);
    let bnorm = norm2(&rhs);
    let mut x = vec![0.0; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveInfo {
                iterations: 0,
                residual: 0.0,
                history,
            },
        ));
    }
    let mut r = rhs.clone();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    deflate(&mut z, nullspace);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(DdfvError::Solver {
                method: "conjugate gradients",
                iterations: it,
                residual: norm2(&r) / bnorm,
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            deflate(&mut x, nullspace);
            return Ok((
                x,
                SolveInfo {
                    iterations: it,
                    residual: rel,
                    history,
                },
            ));
        }
        precond.apply(&r, &mut z);
        deflate(&mut z, nullspace);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(DdfvError::Solver {
        method: "conjugate gradients",
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Restarted GMRES with right preconditioning.
///
/// Starts from `x0` and stops when `‖b − A x‖ ≤ tol ‖b‖`.
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
    precond: &dyn Preconditioner,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveInfo {
                iterations: 0,
                residual: 0.0,
                history,
            },
        ));
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    loop {
        a.apply(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        let rel0 = beta / bnorm;
        if rel0 <= tol {
            return Ok((
                x,
                SolveInfo {
                    iterations: total,
                    residual: rel0,
                    history,
                },
            ));
        }
        if total >= max_iter {
            return Err(DdfvError::Solver {
                method: "GMRES",
                iterations: total,
                residual: rel0,
                history,
            });
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            precond.apply(&v[k], &mut z);
            zs.push(z.clone());
            a.apply(&z, &mut w);
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            history.push(rel);
            if rel <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * zs[j][i];
            }
        }
        if k_used == 0 {
            return Err(DdfvError::Solver {
                method: "GMRES",
                iterations: total,
                residual: rel0,
                history,
            });
        }
    }
}
