//! Conductivity tensors.

use crate::error::{DdfvError, Result};
use crate::geometry::Point;

/// A symmetric matrix; in 2D only the upper-left 2×2 block is used.
pub type Tensor = [[f64; 3]; 3];

/// A tensor-valued function on the diamonds.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorField {
    Uniform(Tensor),
    PerDiamond(Vec<Tensor>),
}

impl TensorField {
    pub fn diagonal(d: [f64; 3]) -> Self {
        TensorField::Uniform([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    #[inline]
    pub fn at(&self, diamond: usize) -> &Tensor {
        match self {
            TensorField::Uniform(t) => t,
            TensorField::PerDiamond(ts) => &ts[diamond],
        }
    }

    /// `M x` for the tensor of a diamond.
    #[inline]
    pub fn apply(&self, diamond: usize, x: Point) -> Point {
        let m = self.at(diamond);
        [
            m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
            m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
            m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2],
        ]
    }

    fn tensors(&self) -> Box<dyn Iterator<Item = &Tensor> + '_> {
        match self {
            TensorField::Uniform(t) => Box::new(std::iter::once(t)),
            TensorField::PerDiamond(ts) => Box::new(ts.iter()),
        }
    }

    /// Check symmetry and that every eigenvalue lies in `[1/γ, γ]`.
    pub fn validate(&self, dim: usize, n_diamonds: usize, gamma: f64, name: &str) -> Result<()> {
        if let TensorField::PerDiamond(ts) = self {
            if ts.len() != n_diamonds {
                return Err(DdfvError::Mismatch(format!(
                    "{name} conductivity has {} tensors for {n_diamonds} diamonds",
                    ts.len()
                )));
            }
        }
        for (i, t) in self.tensors().enumerate() {
            for r in 0..dim {
                for c in 0..dim {
                    if !t[r][c].is_finite() || t[r][c] != t[c][r] {
                        return Err(DdfvError::Config(format!(
                            "{name} conductivity tensor {i} is not symmetric"
                        )));
                    }
                }
            }
            let ev = symmetric_eigenvalues(t, dim);
            let (lo, hi) = ev[..dim]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| {
                    (a.min(e), b.max(e))
                });
            if lo <= 0.0 {
                return Err(DdfvError::Config(format!(
                    "{name} conductivity tensor {i} is not positive definite (eigenvalue {lo:e})"
                )));
            }
            if lo < 1.0 / gamma || hi > gamma {
                return Err(DdfvError::Config(format!(
                    "{name} conductivity tensor {i} has eigenvalues in [{lo:e}, {hi:e}], outside [1/{gamma}, {gamma}]"
                )));
            }
        }
        Ok(())
    }
}

/// Intracellular and extracellular conductivities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityTensors {
    pub intra: TensorField,
    pub extra: TensorField,
}

impl ConductivityTensors {
    /// Uniform diagonal tensors `Diag(λ^l, λ^t, λ^t)` with fibres along the first axis.
    pub fn fibres(intra: (f64, f64), extra: (f64, f64)) -> Result<Self> {
        for (name, v) in [
            ("intra longitudinal", intra.0),
            ("intra transverse", intra.1),
            ("extra longitudinal", extra.0),
            ("extra transverse", extra.1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DdfvError::Config(format!(
                    "{name} conductivity must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            intra: TensorField::diagonal([intra.0, intra.1, intra.1]),
            extra: TensorField::diagonal([extra.0, extra.1, extra.1]),
        })
    }

    /// Identity tensors for both media.
    pub fn identity() -> Self {
        Self {
            intra: TensorField::diagonal([1.0; 3]),
            extra: TensorField::diagonal([1.0; 3]),
        }
    }

    pub fn validate(&self, dim: usize, n_diamonds: usize, gamma: f64) -> Result<()> {
        self.intra
            .validate(dim, n_diamonds, gamma, "intracellular")?;
        self.extra.validate(dim, n_diamonds, gamma, "extracellular")
    }
}

/// Eigenvalues of the leading `dim × dim` block of a symmetric matrix, in
/// increasing order (unused trailing entries are zero).
pub fn symmetric_eigenvalues(m: &Tensor, dim: usize) -> [f64; 3] {
    if dim == 2 {
        let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return [mean - r, mean + r, 0.0];
    }
    // trigonometric solution of the characteristic cubic
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut e = [m[0][0], m[1][1], m[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (m[i][j] - if i == j { q } else { 0.0 }) / p;
    let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e3, e2, e1]
}
