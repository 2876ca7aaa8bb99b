//! Compressed sparse row matrices.

use std::io::Write;
use std::path::Path;

use crate::error::{DdfvError, Result};

/// Anything that can be applied to a vector.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    /// `y ← A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// A sparse matrix in compressed sparse row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // stable bucket by row
        let mut next = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for r in 0..nrows {
            let row = &mut by_row[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0); // stable: duplicates keep input order
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(c);
                data.push(s);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: diag.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterate over the stored entries of a row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.data[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, a)| a * y[j]).sum::<f64>())
            .sum()
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                trip.push((j, i, a));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    /// `α A + β B` (same shape).
    pub fn linear_combination(alpha: f64, a: &CsrMatrix, beta: f64, b: &CsrMatrix) -> Self {
        assert_eq!((a.nrows, a.ncols), (b.nrows, b.ncols));
        let mut trip = Vec::with_capacity(a.nnz() + b.nnz());
        for i in 0..a.nrows {
            trip.extend(a.row(i).map(|(j, v)| (i, j, alpha * v)));
            trip.extend(b.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Self::from_triplets(a.nrows, a.ncols, &trip)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    /// Assemble a 2×2 block matrix from square blocks of equal size.
    pub fn block2(blocks: [[&CsrMatrix; 2]; 2]) -> Self {
        let n = blocks[0][0].nrows;
        let mut trip = Vec::new();
        for (bi, brow) in blocks.iter().enumerate() {
            for (bj, b) in brow.iter().enumerate() {
                assert_eq!(
                    (b.nrows, b.ncols),
                    (n, n),
                    "blocks must be square and equal"
                );
                for i in 0..n {
                    trip.extend(b.row(i).map(|(j, v)| (bi * n + i, bj * n + j, v)));
                }
            }
        }
        Self::from_triplets(2 * n, 2 * n, &trip)
    }

    /// Exact symmetry test: `A == Aᵀ` entry by entry.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && *self == self.transpose()
    }

    /// Replace the rows and columns of `pins` by those of the identity.
    pub fn pinned(&self, pins: &[usize]) -> Self {
        let mut is_pin = vec![false; self.nrows];
        for &p in pins {
            is_pin[p] = true;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            if is_pin[i] {
                trip.push((i, i, 1.0));
                continue;
            }
            trip.extend(
                self.row(i)
                    .filter(|(j, _)| !is_pin[*j])
                    .map(|(j, v)| (i, j, v)),
            );
        }
        Self::from_triplets(self.nrows, self.ncols, &trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    /// Write in MatrixMarket coordinate format.
    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| DdfvError::io(path, e);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
        writeln!(f, "{} {} {}", self.nrows, self.ncols, self.nnz()).map_err(io)?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(f, "{} {} {:e}", i + 1, j + 1, v).map_err(io)?;
            }
        }
        f.flush().map_err(io)
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
