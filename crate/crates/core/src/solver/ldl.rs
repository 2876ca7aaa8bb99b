//! Sparse `L D Lᵀ` factorization of symmetric matrices.
//!
//! Up-looking algorithm driven by the elimination tree, preceded by an
//! approximate minimum degree ordering. No pivoting is performed, so the
//! matrix must be quasi-definite (symmetric positive definite in practice).

use super::sparse::CsrMatrix;
use crate::error::{DdfvError, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factor a symmetric matrix given with both triangles stored.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows;
        assert_eq!(n, a.ncols, "matrix must be square");
        let (perm, pinv) = if n == 0 {
            (Vec::new(), Vec::new())
        } else {
            let (p, pi, _) =
                amd::order::<usize>(n, &a.indptr, &a.indices, &amd::Control::default()).map_err(
                    |s| DdfvError::Input(format!("fill-reducing ordering failed: {s:?}")),
                )?;
            (p, pi)
        };

        // symbolic: elimination tree and column counts of L (CSR of A is CSC of A by symmetry)
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in a.indptr[kk]..a.indptr[kk + 1] {
                let mut i = pinv[a.indices[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        // numeric
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        for x in flag.iter_mut() {
            *x = NONE;
        }
        for x in lnz.iter_mut() {
            *x = 0;
        }
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            let kk = perm[k];
            for p in a.indptr[kk]..a.indptr[kk + 1] {
                let mut i = pinv[a.indices[p]];
                if i <= k {
                    y[i] += a.data[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lnz[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
                top += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(DdfvError::Solver {
                    method: "LDLt factorization",
                    iterations: k,
                    residual: d[k],
                    history: Vec::new(),
                });
            }
        }
        Ok(Self {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal entries of `L`.
    pub fn nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Solve `A x = b` in place (`b` is overwritten by `x`).
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n;
        work.resize(n, 0.0);
        for k in 0..n {
            work[k] = b[self.perm[k]];
        }
        for j in 0..n {
            let yj = work[j];
            for p in self.lp[j]..self.lp[j + 1] {
                work[self.li[p]] -= self.lx[p] * yj;
            }
        }
        for j in 0..n {
            work[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut yj = work[j];
            for p in self.lp[j]..self.lp[j + 1] {
                yj -= self.lx[p] * work[self.li[p]];
            }
            work[j] = yj;
        }
        for k in 0..n {
            b[self.perm[k]] = work[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut work = Vec::new();
        self.solve_in_place(&mut x, &mut work);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // 1D Laplacian plus identity
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        t.push((0, n - 1, -0.5));
        t.push((n - 1, 0, -0.5));
        let a = CsrMatrix::from_triplets(n, n, &t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let f = LdlFactor::factor(&a).unwrap();
        let y = f.solve(&b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(LdlFactor::factor(&a).is_err());
    }
}
